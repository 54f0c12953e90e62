//! `key = value` run configuration.

use ergokit::model::ChainConfig;
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field {
        field: String,
        message: String,
        line: Option<usize>,
    },
    #[error("unknown key `{key}`{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownKey { key: String, line: Option<usize> },
    #[error("experiment: required (one of {})", Experiment::NAMES.join(", "))]
    MissingExperiment,
}

impl ConfigError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.to_string(),
            message: message.into(),
            line: None,
        }
    }

    fn at_line(self, n: usize) -> Self {
        match self {
            ConfigError::Field { field, message, .. } => ConfigError::Field {
                field,
                message,
                line: Some(n),
            },
            ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line: Some(n) },
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Woff,
    Spectrum,
    Rstat,
    Sff,
    Otoc,
    Krylov,
    Entanglement,
    Quench,
    VerifyBch,
}

impl Experiment {
    pub const NAMES: [&'static str; 9] = [
        "woff",
        "spectrum",
        "rstat",
        "sff",
        "otoc",
        "krylov",
        "entanglement",
        "quench",
        "verify-bch",
    ];

    pub fn parse(s: &str) -> Option<Self> {
        use Experiment::*;
        let all = [Woff, Spectrum, Rstat, Sff, Otoc, Krylov, Entanglement, Quench, VerifyBch];
        Self::NAMES.iter().position(|&n| n == s).map(|i| all[i])
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `min:max:count[:log]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn parse(field: &str, s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(ConfigError::field(field, format!("`{s}` is not min:max:count[:log|linear]")));
        }
        let min = parse_f64(field, parts[0])?;
        let max = parse_f64(field, parts[1])?;
        let count = parse_count(field, parts[2])?;
        let spacing = match parts.get(3) {
            None | Some(&"linear") | Some(&"lin") => Spacing::Linear,
            Some(&"log") => Spacing::Log,
            Some(other) => return Err(ConfigError::field(field, format!("unknown spacing `{other}`"))),
        };
        let g = Self {
            min,
            max,
            count,
            spacing,
        };
        g.validate(field)?;
        Ok(g)
    }

    pub fn single(x: f64) -> Self {
        Self {
            min: x,
            max: x,
            count: 1,
            spacing: Spacing::Linear,
        }
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(ConfigError::field(field, "grid is empty"));
        }
        if self.max < self.min {
            return Err(ConfigError::field(field, "max < min"));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(ConfigError::field(field, "log grids need min > 0"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let k = (self.count - 1) as f64;
        match self.spacing {
            Spacing::Linear => (0..self.count)
                .map(|i| {
                    if i == self.count - 1 {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * i as f64 / k
                    }
                })
                .collect(),
            Spacing::Log => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..self.count)
                    .map(|i| {
                        if i == self.count - 1 {
                            self.max
                        } else {
                            (a + (b - a) * i as f64 / k).exp()
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    O1,
    O2,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    AllDown,
    Neel,
    AllUp,
}

/// Fully resolved run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub j1: f64,
    pub jr: f64,
    pub hx: f64,
    pub hz: f64,
    /// J_r values to sweep; `[jr]` unless a grid was given.
    pub jr_grid: Vec<f64>,
    pub jr_grid_spec: Option<GridSpec>,
    pub times: Option<GridSpec>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub format: Format,
    pub window: usize,
    pub eta: f64,
    pub degree: usize,
    pub theta: f64,
    pub run: Option<usize>,
    pub sites: (usize, usize),
    pub operators: Vec<OperatorKind>,
    pub states: Vec<InitialState>,
    pub cut: Option<usize>,
    pub ground_state: bool,
    pub tol: f64,
    pub t_avg: Option<(f64, f64)>,
    pub mem_cap_gb: f64,
    pub scratch: Option<PathBuf>,
}

impl RunConfig {
    pub fn chain(&self, jr: f64) -> Result<ChainConfig, ConfigError> {
        ChainConfig::new(self.n, self.j1, jr, self.hx, self.hz).map_err(|e| {
            let field = match e {
                ergokit::model::ModelError::InvalidParameter { name, .. } => name,
                _ => "n",
            };
            ConfigError::field(field, e.to_string())
        })
    }

    pub fn cut(&self) -> usize {
        self.cut.unwrap_or((self.n - 1) / 2)
    }
}

/// Raw key/value pairs before defaults and validation.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Option<usize>)>,
}

pub const KEYS: [&str; 26] = [
    "experiment",
    "n",
    "j1",
    "jr",
    "hx",
    "hz",
    "jr_grid",
    "times",
    "seeds",
    "output_dir",
    "format",
    "window",
    "eta",
    "degree",
    "theta",
    "run",
    "sites",
    "operator",
    "state",
    "cut",
    "ground_state",
    "tol",
    "t_avg",
    "mem_cap_gb",
    "scratch",
    "points",
];

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let k = k.trim().replace('-', "_");
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            raw.push_at(&k, v.trim(), Some(i + 1))?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.push_at(&key.replace('-', "_"), value, None)
    }

    fn push_at(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
        self.entries.push((key.to_string(), value.to_string(), line));
        Ok(())
    }

    /// Later entries win.
    fn get(&self, key: &str) -> Option<(&str, Option<usize>)> {
        self.entries.iter().rev().find(|(k, _, _)| k == key).map(|(_, v, l)| (v.as_str(), *l))
    }

    fn with<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, ConfigError>) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => parse(v).map(Some).map_err(|e| match line {
                Some(l) => e.at_line(l),
                None => e,
            }),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let experiment = self
            .with("experiment", |v| Experiment::parse(v).ok_or_else(|| ConfigError::field("experiment", format!("unknown experiment `{v}`"))))?
            .ok_or(ConfigError::MissingExperiment)?;
        let f = |k: &'static str| move |v: &str| parse_f64(k, v);
        let c = |k: &'static str| move |v: &str| parse_count(k, v);
        let n = self.with("n", c("n"))?.unwrap_or(7);
        let jr = self.with("jr", f("jr"))?.unwrap_or(1.0);
        let jr_grid_spec = self.with("jr_grid", |v| GridSpec::parse("jr_grid", v))?;
        let points = self.with("points", |v| {
            // accepts 1e6
            let x = parse_f64("points", v)?;
            if x < 1.0 || x.fract() != 0.0 {
                return Err(ConfigError::field("points", format!("`{v}` is not a positive count")));
            }
            Ok(x as usize)
        })?;
        let mut times = self.with("times", |v| GridSpec::parse("times", v))?;
        if let Some(p) = points {
            let mut g = times.unwrap_or(GridSpec {
                min: 1e-6,
                max: 100.0,
                count: p,
                spacing: Spacing::Linear,
            });
            g.count = p;
            times = Some(g);
        }
        let seeds = self
            .with("seeds", |v| {
                v.split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|_| ConfigError::field("seeds", format!("`{s}` is not a seed"))))
                    .collect::<Result<Vec<_>, _>>()
            })?
            .unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(ConfigError::field("seeds", "empty"));
        }
        let format = self
            .with("format", |v| match v {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                "both" => Ok(Format::Both),
                _ => Err(ConfigError::field("format", format!("`{v}` is not csv, json or both"))),
            })?
            .unwrap_or(Format::Both);
        let sites = self
            .with("sites", |v| {
                let p: Vec<&str> = v.split(',').collect();
                if p.len() != 2 {
                    return Err(ConfigError::field("sites", "expected `i,j`"));
                }
                Ok((parse_count("sites", p[0].trim())?, parse_count("sites", p[1].trim())?))
            })?
            .unwrap_or((1, n));
        let operators = self
            .with("operator", |v| {
                v.split(',')
                    .map(|s| match s.trim() {
                        "o1" => Ok(OperatorKind::O1),
                        "o2" => Ok(OperatorKind::O2),
                        "random" => Ok(OperatorKind::Random),
                        other => Err(ConfigError::field("operator", format!("`{other}` is not o1, o2 or random"))),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?
            .unwrap_or_else(|| vec![OperatorKind::O1]);
        let states = self
            .with("state", |v| {
                v.split(',')
                    .map(|s| match s.trim() {
                        "all_down" => Ok(InitialState::AllDown),
                        "neel" => Ok(InitialState::Neel),
                        "all_up" => Ok(InitialState::AllUp),
                        other => Err(ConfigError::field("state", format!("`{other}` is not all_down, neel or all_up"))),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?
            .unwrap_or_else(|| vec![InitialState::AllDown, InitialState::Neel]);
        let t_avg = self.with("t_avg", |v| {
            let (a, b) = v.split_once(':').ok_or_else(|| ConfigError::field("t_avg", "expected `from:to`"))?;
            let (a, b) = (parse_f64("t_avg", a.trim())?, parse_f64("t_avg", b.trim())?);
            if !(a < b) {
                return Err(ConfigError::field("t_avg", "from must be below to"));
            }
            Ok((a, b))
        })?;
        let ground_state = self
            .with("ground_state", |v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(ConfigError::field("ground_state", format!("`{v}` is not a boolean"))),
            })?
            .unwrap_or(false);

        let cfg = RunConfig {
            experiment,
            n,
            j1: self.with("j1", f("j1"))?.unwrap_or(1.0),
            jr,
            hx: self.with("hx", f("hx"))?.unwrap_or(1.05),
            hz: self.with("hz", f("hz"))?.unwrap_or(0.5),
            jr_grid: jr_grid_spec.map(|g| g.values()).unwrap_or_else(|| vec![jr]),
            jr_grid_spec,
            times,
            seeds,
            output_dir: self.get("output_dir").map(|(v, _)| PathBuf::from(v)).unwrap_or_else(|| PathBuf::from("out")),
            format,
            window: self.with("window", c("window"))?.unwrap_or(51),
            eta: self.with("eta", f("eta"))?.unwrap_or(0.5),
            degree: self.with("degree", c("degree"))?.unwrap_or(10),
            theta: self.with("theta", f("theta"))?.unwrap_or(0.1),
            run: self.with("run", c("run"))?,
            sites,
            operators,
            states,
            cut: self.with("cut", c("cut"))?,
            ground_state,
            tol: self.with("tol", f("tol"))?.unwrap_or(1e-10),
            t_avg,
            mem_cap_gb: self.with("mem_cap_gb", f("mem_cap_gb"))?.unwrap_or(8.0),
            scratch: self.get("scratch").map(|(v, _)| PathBuf::from(v)),
        };
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    for &jr in &cfg.jr_grid {
        cfg.chain(jr)?;
    }
    let (i, j) = cfg.sites;
    if i == 0 || j == 0 || i > cfg.n || j > cfg.n {
        return Err(ConfigError::field("sites", format!("sites must lie in 1..={}", cfg.n)));
    }
    if let Some(cut) = cfg.cut {
        if cut == 0 || cut >= cfg.n {
            return Err(ConfigError::field("cut", format!("cut must lie in 1..={}", cfg.n - 1)));
        }
    }
    if cfg.window == 0 {
        return Err(ConfigError::field("window", "must be positive"));
    }
    if !(cfg.eta > 0.0) {
        return Err(ConfigError::field("eta", "must be positive"));
    }
    if !(cfg.theta > 0.0) {
        return Err(ConfigError::field("theta", "must be positive"));
    }
    if !(cfg.tol >= 0.0) {
        return Err(ConfigError::field("tol", "must be nonnegative"));
    }
    if !(cfg.mem_cap_gb > 0.0) {
        return Err(ConfigError::field("mem_cap_gb", "must be positive"));
    }
    if cfg.experiment == Experiment::Woff && cfg.jr_grid.len() < 5 && cfg.jr_grid_spec.is_some() {
        return Err(ConfigError::field("jr_grid", "a W_off fit needs at least 5 points"));
    }
    Ok(())
}

fn parse_f64(field: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::field(field, format!("`{v}` is not a number")))
}

fn parse_count(field: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse::<usize>().map_err(|_| ConfigError::field(field, format!("`{v}` is not a count")))
}

/// Parses a config file's text; the experiment may still be missing.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = parse_config("experiment = rstat").unwrap();
        assert_eq!((c.n, c.jr, c.j1, c.hx, c.hz), (7, 1.0, 1.0, 1.05, 0.5));
        assert_eq!(c.jr_grid, vec![1.0]);
        assert_eq!(parse_config(""), Err(ConfigError::MissingExperiment));
    }

    #[test]
    fn grids() {
        let c = parse_config("experiment = rstat\njr_grid = 1.05:5:50").unwrap();
        assert_eq!(c.jr_grid.len(), 50);
        assert_eq!(c.jr_grid[0], 1.05);
        assert_eq!(c.jr_grid[49], 5.0);
        let g = GridSpec::parse("times", "0.01:100:5:log").unwrap().values();
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-14);
        assert!(GridSpec::parse("times", "0:1:5:log").is_err());
        assert!(GridSpec::parse("times", "0:1:0").is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_config("experiment = woff\n\nhx = abc").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("hx") && msg.contains("line 3"), "{msg}");
        let e = parse_config("experiment = woff\nfoo = 1").unwrap_err();
        assert!(e.to_string().contains("foo"));
        assert!(matches!(parse_config("experiment woff"), Err(ConfigError::Syntax { line: 1 })));
        assert!(parse_config("experiment = rstat\nn = 8").unwrap_err().to_string().contains('n'));
    }

    #[test]
    fn overrides_win() {
        let mut raw = RawConfig::parse("experiment = sff\nn = 9").unwrap();
        raw.set("n", "5").unwrap();
        raw.set("points", "1e3").unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(c.n, 5);
        assert_eq!(c.times.unwrap().count, 1000);
    }
}
