//! Experiment dispatch. Each `(J_r, operator/state, seed)` cell writes its
//! own CSV files; one JSON summary per run collects the cells.

use crate::config::{ConfigError, Experiment, GridSpec, InitialState, OperatorKind, RunConfig, Spacing};
use crate::output::{fmt_tag, num, write_json, Csv};
use ergokit::dynamics::series::MAX_SERIES_SITES;
use ergokit::dynamics::{otoc_series, saturation, verify_bch_commutators, OtocExpansion};
use ergokit::entanglement::{eigenstate_entanglement_scan, ground_state_entropy, named_state, quench_entropy_series, NamedState};
use ergokit::krylov::{
    arnoldi, arnoldi_out_of_core, bn_dispersion, complexity_curve, ipr, operator_o1, operator_o2, random_product_operator,
    spread_measure, time_averaged_complexity, ArnoldiOptions, BasisStore, DispersionParams, HsVector,
};
use ergokit::model::{build_hamiltonian, fit_alpha_samples, off_diagonal_weight, ChainConfig};
use ergokit::numerics::{eigh_real, eigvalsh_real, seeded_rng};
use ergokit::spectral::{g_metric, r_statistic, sff, sff_goe, thouless_time, unfold, ThoulessParams};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("refusing to start: estimated memory {needed_gb:.2} GB exceeds the cap of {cap_gb} GB{hint}")]
    Resource { needed_gb: f64, cap_gb: f64, hint: String },
    #[error("{0}")]
    Compute(String),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Resource { .. } => 3,
            _ => 1,
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Compute(e.to_string())
}

#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Value,
    /// Set when a check the experiment performs did not pass.
    pub failed: bool,
}

const GB: f64 = 1024.0 * 1024.0 * 1024.0;

/// Peak bytes the experiment is expected to hold.
pub fn memory_estimate(cfg: &RunConfig) -> f64 {
    let d = (1usize << cfg.n) as f64;
    let real = 8.0 * d * d;
    let complex = 16.0 * d * d;
    match cfg.experiment {
        Experiment::Woff | Experiment::VerifyBch => 2.0 * real + 8.0 * complex,
        Experiment::Spectrum | Experiment::Rstat | Experiment::Sff => 2.0 * real,
        Experiment::Otoc => 3.0 * real + 8.0 * complex,
        Experiment::Entanglement if cfg.ground_state => 2.0 * real,
        Experiment::Entanglement | Experiment::Quench => 3.0 * real,
        Experiment::Krylov => {
            let basis = if cfg.scratch.is_some() {
                0.0
            } else {
                BasisStore::bytes_for(1 << cfg.n, (1 << cfg.n) * (1 << cfg.n)) as f64
            };
            basis + 3.0 * real + 8.0 * complex + complex * krylov_times(cfg).len() as f64
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    let needed = memory_estimate(cfg);
    if needed > cfg.mem_cap_gb * GB {
        let hint = if cfg.experiment == Experiment::Krylov && cfg.scratch.is_none() {
            "; set `scratch` to stream the Krylov basis through a file".to_string()
        } else {
            String::new()
        };
        return Err(RunError::Resource {
            needed_gb: needed / GB,
            cap_gb: cfg.mem_cap_gb,
            hint,
        });
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (files, cells, failed, extra) = match cfg.experiment {
        Experiment::Woff => woff(cfg)?,
        Experiment::Spectrum => per_jr(cfg, spectrum_cell)?,
        Experiment::Rstat => rstat(cfg)?,
        Experiment::Sff => per_jr(cfg, sff_cell)?,
        Experiment::Otoc => per_jr(cfg, otoc_cell)?,
        Experiment::Krylov => krylov(cfg)?,
        Experiment::Entanglement => per_jr(cfg, entanglement_cell)?,
        Experiment::Quench => quench(cfg)?,
        Experiment::VerifyBch => verify_bch(cfg)?,
    };
    let mut summary = json!({
        "experiment": cfg.experiment.name(),
        "config": serde_json::to_value(cfg).map_err(compute)?,
        "memory_estimate_bytes": needed,
        "cells": cells,
        "passed": !failed,
    });
    if let Value::Object(extra) = extra {
        summary.as_object_mut().unwrap().extend(extra);
    }
    let mut files = files;
    if cfg.format != crate::config::Format::Csv {
        let path = cfg.output_dir.join(format!("{}_N{}.json", cfg.experiment.name(), cfg.n));
        files.push(write_json(&path, &summary)?);
    }
    Ok(Report { files, summary, failed })
}

type Outcome = (Vec<PathBuf>, Vec<Value>, bool, Value);

struct Cellout {
    files: Vec<PathBuf>,
    summary: Value,
    failed: bool,
}

fn per_jr(cfg: &RunConfig, f: fn(&RunConfig, &ChainConfig) -> Result<Cellout, RunError>) -> Result<Outcome, RunError> {
    let outs = cfg
        .jr_grid
        .par_iter()
        .map(|&jr| f(cfg, &cfg.chain(jr)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collect(outs))
}

fn collect(outs: Vec<Cellout>) -> Outcome {
    let failed = outs.iter().any(|o| o.failed);
    let mut files = Vec::new();
    let mut cells = Vec::new();
    for o in outs {
        files.extend(o.files);
        cells.push(o.summary);
    }
    (files, cells, failed, Value::Null)
}

fn stem(cfg: &RunConfig, jr: f64) -> String {
    format!("{}_N{}_Jr{}", cfg.experiment.name(), cfg.n, fmt_tag(jr))
}

fn csv_out(cfg: &RunConfig, name: String, csv: &Csv, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    if cfg.format.csv() {
        files.push(csv.write(&cfg.output_dir.join(name))?);
    }
    Ok(())
}

fn woff(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let grid = match cfg.jr_grid_spec {
        Some(_) => cfg.jr_grid.clone(),
        None => GridSpec {
            min: 5.0,
            max: 100.0,
            count: 20,
            spacing: Spacing::Log,
        }
        .values(),
    };
    let weights = grid
        .par_iter()
        .map(|&jr| {
            let h = build_hamiltonian(&cfg.chain(jr)?).map_err(compute)?;
            off_diagonal_weight(&h).map_err(compute)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let fit = fit_alpha_samples(&grid, &weights).map_err(compute)?;
    let mut csv = Csv::new(&["j_ratio", "w_off"]);
    for (&jr, &w) in grid.iter().zip(&weights) {
        csv.row(vec![jr.into(), w.into()]);
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("woff_N{}.csv", cfg.n), &csv, &mut files)?;
    let extra = json!({"alpha": num(fit.alpha), "intercept": num(fit.fit.intercept()), "points": grid.len()});
    Ok((files, Vec::new(), false, extra))
}

fn spectrum_cell(cfg: &RunConfig, chain: &ChainConfig) -> Result<Cellout, RunError> {
    let h = build_hamiltonian(chain).map_err(compute)?;
    let e = eigvalsh_real(h.matrix).map_err(compute)?;
    let mut csv = Csv::new(&["index", "energy"]);
    for (i, &x) in e.iter().enumerate() {
        csv.row(vec![i.into(), x.into()]);
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("{}.csv", stem(cfg, chain.j_ratio)), &csv, &mut files)?;
    Ok(Cellout {
        files,
        summary: json!({"j_ratio": num(chain.j_ratio), "levels": e.len(), "e_min": num(e[0]), "e_max": num(e[e.len() - 1])}),
        failed: false,
    })
}

fn rstat(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let rs = cfg
        .jr_grid
        .par_iter()
        .map(|&jr| {
            let h = build_hamiltonian(&cfg.chain(jr)?).map_err(compute)?;
            let e = eigvalsh_real(h.matrix).map_err(compute)?;
            r_statistic(&e).map_err(compute)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut csv = Csv::new(&["j_ratio", "r", "ratios", "zero_pairs"]);
    let mut cells = Vec::new();
    for (&jr, r) in cfg.jr_grid.iter().zip(&rs) {
        csv.row(vec![jr.into(), r.mean.into(), r.ratios.into(), r.zero_pairs.into()]);
        cells.push(json!({"j_ratio": num(jr), "r": num(r.mean), "zero_pairs": r.zero_pairs}));
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("rstat_N{}.csv", cfg.n), &csv, &mut files)?;
    Ok((files, cells, false, Value::Null))
}

fn sff_cell(cfg: &RunConfig, chain: &ChainConfig) -> Result<Cellout, RunError> {
    let h = build_hamiltonian(chain).map_err(compute)?;
    let e = eigvalsh_real(h.matrix).map_err(compute)?;
    let u = unfold(&e, cfg.degree).map_err(compute)?;
    let grid = cfg
        .times
        .unwrap_or(GridSpec {
            min: 1e-6,
            max: 100.0,
            count: 100_000,
            spacing: Spacing::Linear,
        })
        .values();
    let curve = sff(&u, cfg.eta, &grid, cfg.window).map_err(compute)?;
    let params = ThoulessParams {
        tolerance: cfg.theta,
        run: cfg.run.unwrap_or(cfg.window),
    };
    let th = thouless_time(&curve, params);
    let mut csv = Csv::new(&["t", "sff_raw", "sff", "sff_goe"]);
    for k in 0..curve.times.len() {
        let t = curve.times[k];
        csv.row(vec![t.into(), curve.raw[k].into(), curve.values[k].into(), sff_goe(t).into()]);
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("{}.csv", stem(cfg, chain.j_ratio)), &csv, &mut files)?;
    let summary = match &th {
        Ok(t) => json!({"j_ratio": num(chain.j_ratio), "thouless_time": num(*t), "g": num(g_metric(*t).unwrap_or(f64::NAN))}),
        Err(err) => json!({"j_ratio": num(chain.j_ratio), "thouless_time": Value::Null, "thouless_error": err.to_string()}),
    };
    Ok(Cellout {
        files,
        summary,
        failed: false,
    })
}

fn otoc_cell(cfg: &RunConfig, chain: &ChainConfig) -> Result<Cellout, RunError> {
    let (i, j) = cfg.sites;
    let h = build_hamiltonian(chain).map_err(compute)?;
    let spec = eigh_real(&h.matrix).map_err(compute)?;
    let grid = cfg
        .times
        .unwrap_or(GridSpec {
            min: 0.01,
            max: 1000.0,
            count: 200,
            spacing: Spacing::Log,
        })
        .values();
    let series = otoc_series(&spec, chain, i, j, &grid).map_err(compute)?;
    let sat = saturation(&series);
    let mut csv = Csv::new(&["t", "otoc"]);
    for (&t, &c) in series.times.iter().zip(&series.values) {
        csv.row(vec![t.into(), c.into()]);
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("{}.csv", stem(cfg, chain.j_ratio)), &csv, &mut files)?;
    let mut summary = json!({
        "j_ratio": num(chain.j_ratio), "i": i, "j": j, "d": series.d,
        "saturation_mean": num(sat.mean), "saturation_std": num(sat.std), "saturation_samples": sat.samples,
    });
    if chain.n_sites <= MAX_SERIES_SITES {
        let ex = OtocExpansion::new(chain, i, j, 0.05).map_err(compute)?;
        let obj = summary.as_object_mut().unwrap();
        obj.insert("leading_order".into(), json!(ex.leading_order()));
        obj.insert("leading_kappa".into(), num(ex.leading_kappa()));
    }
    Ok(Cellout {
        files,
        summary,
        failed: false,
    })
}

fn krylov_times(cfg: &RunConfig) -> Vec<f64> {
    cfg.times
        .unwrap_or(GridSpec {
            min: 0.0,
            max: 5000.0,
            count: 501,
            spacing: Spacing::Linear,
        })
        .values()
}

struct KrylovCell {
    chain: ChainConfig,
    kind: OperatorKind,
    seed: Option<u64>,
}

fn krylov(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut cells = Vec::new();
    for &jr in &cfg.jr_grid {
        let chain = cfg.chain(jr)?;
        for &kind in &cfg.operators {
            if kind == OperatorKind::Random {
                cells.extend(cfg.seeds.iter().map(|&s| KrylovCell {
                    chain,
                    kind,
                    seed: Some(s),
                }));
            } else {
                cells.push(KrylovCell { chain, kind, seed: None });
            }
        }
    }
    if cfg.n < 5 && cfg.operators.contains(&OperatorKind::O2) {
        return Err(ConfigError::Field {
            field: "operator".into(),
            message: "o2 needs n ≥ 5".into(),
            line: None,
        }
        .into());
    }
    // the basis can be large; cells run one after another and parallelize inside
    let outs = cells.iter().map(|c| krylov_cell(cfg, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(collect(outs))
}

fn krylov_cell(cfg: &RunConfig, cell: &KrylovCell) -> Result<Cellout, RunError> {
    let n = cfg.n;
    let (label, o): (String, HsVector) = match (cell.kind, cell.seed) {
        (OperatorKind::O1, _) => ("o1".into(), operator_o1(n).map_err(compute)?),
        (OperatorKind::O2, _) => ("o2".into(), operator_o2(n).map_err(compute)?),
        (OperatorKind::Random, seed) => {
            let s = seed.unwrap_or(0);
            (format!("random_seed{s}"), random_product_operator(n, s))
        }
    };
    let h = build_hamiltonian(&cell.chain).map_err(compute)?;
    let spec = eigh_real(&h.matrix).map_err(compute)?;
    let d = 1usize << n;
    let opts = ArnoldiOptions {
        tol: cfg.tol,
        ..ArnoldiOptions::exhaustive(d)
    };
    let base = format!("{}_{}", stem(cfg, cell.chain.j_ratio), label);
    let dec = match &cfg.scratch {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            arnoldi_out_of_core(&h, &o, opts, dir.join(format!("{base}.kryv")))
        }
        None => arnoldi(&h, &o, opts),
    }
    .map_err(compute)?;
    let times = krylov_times(cfg);
    let curve = complexity_curve(&o, &spec, &dec, &times).map_err(compute)?;
    let disp_params = DispersionParams::for_length(dec.len());
    let disp = bn_dispersion(&dec.b, disp_params);
    let avg = time_averaged_complexity(&o, &spec, &dec, 1e-9).map_err(compute)?;
    let s_k = spread_measure(&curve.final_amplitudes, dec.len()).map_err(compute)?;
    let ipr_value = ipr(&o, &spec).map_err(compute)?;
    let parseval_ok = curve.max_completeness_defect < 1e-8;

    let mut files = Vec::new();
    let mut bcsv = Csv::new(&["n", "b_n"]);
    for (k, &b) in dec.b.iter().enumerate() {
        bcsv.row(vec![k.into(), b.into()]);
    }
    csv_out(cfg, format!("{base}_bn.csv"), &bcsv, &mut files)?;
    let mut kcsv = Csv::new(&["t", "k_c"]);
    for (&t, &k) in curve.times.iter().zip(&curve.kc) {
        kcsv.row(vec![t.into(), k.into()]);
    }
    csv_out(cfg, format!("{base}_kc.csv"), &kcsv, &mut files)?;
    let mut pcsv = Csv::new(&["n", "phi_sq"]);
    for (k, z) in curve.final_amplitudes.iter().enumerate() {
        pcsv.row(vec![k.into(), z.norm_sqr().into()]);
    }
    csv_out(cfg, format!("{base}_phi.csv"), &pcsv, &mut files)?;

    let mut summary = json!({
        "j_ratio": num(cell.chain.j_ratio),
        "operator": label,
        "seed": cell.seed,
        "K": dec.len(),
        "K_bound": dec.bound(),
        "exhausted": dec.exhausted,
        "ipr": num(ipr_value),
        "s_k": num(s_k),
        "t_sat": num(*times.last().unwrap()),
        "kbar_c": num(avg.kbar),
        "degenerate_gap_groups": avg.degenerate_groups,
        "max_completeness_defect": num(curve.max_completeness_defect),
        "parseval_ok": parseval_ok,
        "dispersion_n0": disp_params.n0,
        "dispersion_w": disp_params.w,
        "dispersion_auto_scaled": disp_params.auto_scaled,
    });
    let obj = summary.as_object_mut().unwrap();
    match disp {
        Ok(dv) => {
            obj.insert("sigma_bn".into(), num(dv.sigma));
            obj.insert("inverse_sigma_bn".into(), num(dv.inverse));
        }
        Err(e) => {
            obj.insert("sigma_bn".into(), Value::Null);
            obj.insert("sigma_bn_error".into(), json!(e.to_string()));
        }
    }
    if let Some((a, b)) = cfg.t_avg {
        let window: Vec<f64> = curve.times.iter().zip(&curve.kc).filter(|(t, _)| **t >= a && **t <= b).map(|(_, k)| *k).collect();
        let mean = if window.is_empty() {
            f64::NAN
        } else {
            window.iter().sum::<f64>() / window.len() as f64
        };
        obj.insert("k_c_window_mean".into(), num(mean));
    }
    Ok(Cellout {
        files,
        summary,
        failed: !parseval_ok,
    })
}

fn entanglement_cell(cfg: &RunConfig, chain: &ChainConfig) -> Result<Cellout, RunError> {
    let cut = cfg.cut();
    let mut files = Vec::new();
    if cfg.ground_state {
        let (e0, s0) = ground_state_entropy(chain, cut).map_err(compute)?;
        return Ok(Cellout {
            files,
            summary: json!({"N": cfg.n, "j_ratio": num(chain.j_ratio), "cut": cut, "ground_state_energy": num(e0), "ground_state_entropy": num(s0)}),
            failed: false,
        });
    }
    let h = build_hamiltonian(chain).map_err(compute)?;
    let spec = eigh_real(&h.matrix).map_err(compute)?;
    let scan = eigenstate_entanglement_scan(&spec, cfg.n, cut).map_err(compute)?;
    let mut csv = Csv::new(&["energy", "entropy"]);
    for (&e, &s) in scan.energies.iter().zip(&scan.entropies) {
        csv.row(vec![e.into(), s.into()]);
    }
    csv_out(cfg, format!("{}.csv", stem(cfg, chain.j_ratio)), &csv, &mut files)?;
    let mean = scan.entropies.iter().sum::<f64>() / scan.entropies.len() as f64;
    Ok(Cellout {
        files,
        summary: json!({
            "N": cfg.n, "j_ratio": num(chain.j_ratio), "cut": cut,
            "median_entropy": num(scan.median()), "mean_entropy": num(mean),
            "ground_state_entropy": num(scan.entropies[0]),
        }),
        failed: false,
    })
}

fn quench(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let cells: Vec<(f64, InitialState)> = cfg.jr_grid.iter().flat_map(|&jr| cfg.states.iter().map(move |&s| (jr, s))).collect();
    let grid = cfg
        .times
        .unwrap_or(GridSpec {
            min: 0.0,
            max: 100.0,
            count: 401,
            spacing: Spacing::Linear,
        })
        .values();
    let outs = cells
        .par_iter()
        .map(|&(jr, state)| {
            let chain = cfg.chain(jr)?;
            let kind = match state {
                InitialState::AllDown => NamedState::AllDown,
                InitialState::Neel => NamedState::Neel,
                InitialState::AllUp => NamedState::AllUp,
            };
            let h = build_hamiltonian(&chain).map_err(compute)?;
            let spec = eigh_real(&h.matrix).map_err(compute)?;
            let series = quench_entropy_series(&named_state(kind, cfg.n), &spec, cfg.cut(), &grid).map_err(compute)?;
            let mut csv = Csv::new(&["t", "entropy"]);
            for (&t, &s) in series.times.iter().zip(&series.values) {
                csv.row(vec![t.into(), s.into()]);
            }
            let mut files = Vec::new();
            csv_out(cfg, format!("{}_{}.csv", stem(cfg, jr), kind.label()), &csv, &mut files)?;
            let t_half = grid.last().copied().unwrap_or(0.0) / 2.0;
            Ok(Cellout {
                files,
                summary: json!({
                    "j_ratio": num(jr), "state": kind.label(), "cut": cfg.cut(),
                    "plateau": num(series.mean_after(t_half).unwrap_or(f64::NAN)),
                }),
                failed: false,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(collect(outs))
}

fn verify_bch(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut cases = vec![("config".to_string(), cfg.chain(cfg.jr)?)];
    for &seed in &cfg.seeds {
        let mut rng = seeded_rng(seed);
        let j1 = rng.random_range(0.2..2.0);
        let j2 = rng.random_range(0.0..3.0);
        let hx = rng.random_range(-2.0..2.0);
        let hz = rng.random_range(-2.0..2.0);
        let chain = ChainConfig::new(cfg.n, j1, j2 / j1, hx, hz).map_err(compute)?;
        cases.push((format!("seed{seed}"), chain));
    }
    let mut csv = Csv::new(&["case", "j1", "j2", "hx", "hz", "order1", "order2", "order3"]);
    let mut cells = Vec::new();
    let mut failed = false;
    for (k, (name, chain)) in cases.iter().enumerate() {
        let r = verify_bch_commutators(chain).map_err(compute)?;
        failed |= !r.passed();
        let dev = r.max_deviation;
        csv.row(vec![
            k.into(),
            chain.j1.into(),
            chain.j2().into(),
            chain.hx.into(),
            chain.hz.into(),
            dev[0].into(),
            dev[1].into(),
            dev[2].into(),
        ]);
        cells.push(json!({
            "case": name, "j1": num(chain.j1), "j2": num(chain.j2()), "hx": num(chain.hx), "hz": num(chain.hz),
            "max_deviation": [num(dev[0]), num(dev[1]), num(dev[2])],
            "tolerance": num(r.tolerance), "passed": r.passed(),
        }));
    }
    let mut files = Vec::new();
    csv_out(cfg, format!("verify-bch_N{}.csv", cfg.n), &csv, &mut files)?;
    Ok((files, cells, failed, Value::Null))
}

/// Paths relative to `root`, for printing.
pub fn relative<'a>(root: &Path, p: &'a Path) -> &'a Path {
    p.strip_prefix(root).unwrap_or(p)
}
