use clap::Parser;
use ergokit_cli::config::{Experiment, RawConfig};
use ergokit_cli::run::{relative, run, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Ergodicity-breaking diagnostics for the two-coupling Ising chain.
///
/// Settings come from an optional `key = value` file, then from flags; flags
/// win. Grids are `min:max:count` with an optional `:log`.
#[derive(Parser, Debug)]
#[command(name = "ergokit", version)]
struct Cli {
    /// woff, spectrum, rstat, sff, otoc, krylov, entanglement, quench or verify-bch
    experiment: Option<String>,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    j1: Option<String>,
    #[arg(long)]
    jr: Option<String>,
    #[arg(long)]
    hx: Option<String>,
    #[arg(long)]
    hz: Option<String>,
    /// J_r sweep, e.g. 1.05:5:50
    #[arg(long)]
    jr_grid: Option<String>,
    /// Time grid, e.g. 0:5000:501 or 0.01:1000:200:log
    #[arg(long)]
    times: Option<String>,
    /// Number of time points (keeps the grid's range)
    #[arg(long)]
    points: Option<String>,
    /// Comma-separated seeds
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long = "out")]
    output_dir: Option<String>,
    /// csv, json or both
    #[arg(long)]
    format: Option<String>,
    /// SFF moving-average window
    #[arg(long)]
    window: Option<String>,
    /// Gaussian filter width for the SFF
    #[arg(long)]
    eta: Option<String>,
    /// Unfolding polynomial degree
    #[arg(long)]
    degree: Option<String>,
    /// Thouless relative tolerance
    #[arg(long)]
    theta: Option<String>,
    /// Thouless run length (defaults to the window)
    #[arg(long)]
    run: Option<String>,
    /// OTOC sites `i,j`
    #[arg(long)]
    sites: Option<String>,
    /// Krylov seeds: o1, o2, random (comma-separated)
    #[arg(long)]
    operator: Option<String>,
    /// Quench states: all_down, neel, all_up (comma-separated)
    #[arg(long)]
    state: Option<String>,
    /// Entanglement cut x (sites 1..=x on the left)
    #[arg(long)]
    cut: Option<String>,
    /// Only the ground state (entanglement)
    #[arg(long)]
    ground_state: bool,
    /// Arnoldi termination tolerance, relative to ‖O‖
    #[arg(long)]
    tol: Option<String>,
    /// Window `from:to` for the mean of K_C(t)
    #[arg(long)]
    t_avg: Option<String>,
    /// Memory cap in GB
    #[arg(long)]
    mem_cap_gb: Option<String>,
    /// Directory for the Krylov basis scratch files
    #[arg(long)]
    scratch: Option<String>,
    /// Extra `key=value` settings
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn overrides(cli: &Cli) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut add = |k: &'static str, v: &Option<String>| {
        if let Some(v) = v {
            out.push((k, v.clone()));
        }
    };
    add("experiment", &cli.experiment);
    add("n", &cli.n);
    add("j1", &cli.j1);
    add("jr", &cli.jr);
    add("hx", &cli.hx);
    add("hz", &cli.hz);
    add("jr_grid", &cli.jr_grid);
    add("times", &cli.times);
    add("points", &cli.points);
    add("seeds", &cli.seeds);
    add("output_dir", &cli.output_dir);
    add("format", &cli.format);
    add("window", &cli.window);
    add("eta", &cli.eta);
    add("degree", &cli.degree);
    add("theta", &cli.theta);
    add("run", &cli.run);
    add("sites", &cli.sites);
    add("operator", &cli.operator);
    add("state", &cli.state);
    add("cut", &cli.cut);
    add("tol", &cli.tol);
    add("t_avg", &cli.t_avg);
    add("mem_cap_gb", &cli.mem_cap_gb);
    add("scratch", &cli.scratch);
    if cli.ground_state {
        out.push(("ground_state", "true".into()));
    }
    out
}

fn configure(cli: &Cli) -> Result<ergokit_cli::RunConfig, RunError> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Config(ergokit_cli::ConfigError::Field {
                    field: "config".into(),
                    message: format!("{}: {e}", path.display()),
                    line: None,
                })
            })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for (k, v) in overrides(cli) {
        raw.set(k, &v)?;
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or(ergokit_cli::ConfigError::Syntax { line: 0 })?;
        raw.set(k.trim(), v.trim())?;
    }
    Ok(raw.resolve()?)
}

fn threads() -> Result<(), RunError> {
    if let Ok(v) = std::env::var("ERGOKIT_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            RunError::Config(ergokit_cli::ConfigError::Field {
                field: "ERGOKIT_THREADS".into(),
                message: format!("`{v}` is not a positive count"),
                line: None,
            })
        })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| RunError::Compute(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads().and_then(|_| configure(&cli)).and_then(|cfg| run(&cfg).map(|r| (cfg, r)));
    match result {
        Ok((cfg, report)) => {
            for f in &report.files {
                println!("{}", relative(&cfg.output_dir, f).display());
            }
            if report.failed {
                eprintln!("warning: {} reported a failed check; see the JSON summary", cfg.experiment.name());
                if cfg.experiment == Experiment::VerifyBch {
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
