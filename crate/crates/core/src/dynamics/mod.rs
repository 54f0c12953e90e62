//! Heisenberg evolution and the infinite-temperature OTOC
//! `C(t) = 1 − Re tr[W(t) V W(t) V] / D` with `W = σz_j`, `V = σz_i`.

use crate::model::{sigma_z_diagonal, site_pauli, Axis, ChainConfig, HamiltonianMatrix, ModelError};
use crate::numerics::{ComplexMatrix, RealMatrix, Spectrum};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

pub mod series;

pub use series::OtocExpansion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("operator is {got}x{got} but the spectrum has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("site {site} outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("only {got} usable points in the early-growth window (need 10)")]
    WindowTooSmall { got: usize },
    #[error("{name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Dense operator with a human-readable label.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: ComplexMatrix,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>) -> Self {
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn site_pauli(n_sites: usize, site: usize, axis: Axis) -> Result<Self, DynamicsError> {
        check_site(site, n_sites)?;
        let name = match axis {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        let m = site_pauli(n_sites, site, axis);
        debug_assert!(m.is_hermitian());
        Ok(Self::new(m, format!("sigma{name}_{site}")))
    }

    pub fn hamiltonian(h: &HamiltonianMatrix) -> Self {
        Self::new(h.to_complex(), "H")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

fn check_site(site: usize, n_sites: usize) -> Result<(), DynamicsError> {
    if site == 0 || site > n_sites {
        return Err(DynamicsError::SiteOutOfRange { site, n_sites });
    }
    Ok(())
}

fn check_dim(op: &ComplexMatrix, spec: &Spectrum) -> Result<(), DynamicsError> {
    if op.rows() != spec.dim() || op.cols() != spec.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: spec.dim(),
            got: op.rows(),
        });
    }
    Ok(())
}

/// `(re, im)` split of a complex matrix.
fn split(m: &ComplexMatrix) -> (RealMatrix, RealMatrix) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: &RealMatrix, im: &RealMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(re.rows(), re.cols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// `Vᵀ O V` for complex `O` and the real eigenvector matrix `V`.
pub fn to_eigenbasis(op: &ComplexMatrix, spec: &Spectrum) -> ComplexMatrix {
    let v = &spec.eigenvectors;
    let vt = v.transpose();
    let (re, im) = split(op);
    join(&vt.matmul(&re).matmul(v), &vt.matmul(&im).matmul(v))
}

/// `V O Vᵀ`, the inverse of [`to_eigenbasis`].
pub fn from_eigenbasis(op: &ComplexMatrix, spec: &Spectrum) -> ComplexMatrix {
    let v = &spec.eigenvectors;
    let vt = v.transpose();
    let (re, im) = split(op);
    join(&v.matmul(&re).matmul(&vt), &v.matmul(&im).matmul(&vt))
}

/// Multiplies entry `(α, β)` by `e^{i(λ_α − λ_β)t}`.
pub fn apply_phases(op: &mut ComplexMatrix, eigenvalues: &[f64], t: f64) {
    let phases: Vec<Complex64> = eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l * t)).collect();
    let n = op.rows();
    for a in 0..n {
        let pa = phases[a];
        for (b, z) in op.row_mut(a).iter_mut().enumerate() {
            *z *= pa * phases[b].conj();
        }
    }
}

/// `O(t) = e^{iHt} O e^{−iHt}` through the eigendecomposition.
pub fn evolve_operator(op: &OperatorMatrix, spec: &Spectrum, t: f64) -> Result<OperatorMatrix, DynamicsError> {
    check_dim(&op.matrix, spec)?;
    let mut m = to_eigenbasis(&op.matrix, spec);
    apply_phases(&mut m, &spec.eigenvalues, t);
    Ok(OperatorMatrix::new(from_eigenbasis(&m, spec), format!("{}(t={t})", op.label)))
}

/// Precomputed pieces for repeated OTOC evaluation of one `(i, j)` pair.
///
/// With `V` diagonal and ±1, `C = ‖[W(t), V]‖²_F / 2D`, which reduces to
/// `(2/D) Σ |W(t)_ab|²` over pairs with `v_a ≠ v_b`. Summing squares avoids
/// the cancellation in `1 − tr(…)/D`, so C stays accurate down to ~1e-28.
pub struct OtocEngine<'a> {
    spec: &'a Spectrum,
    w_eigen: RealMatrix,
    v_sign: Vec<f64>,
    pub i: usize,
    pub j: usize,
}

impl<'a> OtocEngine<'a> {
    /// `V = σz_i` stays fixed, `W = σz_j` is evolved.
    pub fn new(spec: &'a Spectrum, n_sites: usize, i: usize, j: usize) -> Result<Self, DynamicsError> {
        check_site(i, n_sites)?;
        check_site(j, n_sites)?;
        if spec.dim() != 1 << n_sites {
            return Err(DynamicsError::DimensionMismatch {
                expected: spec.dim(),
                got: 1 << n_sites,
            });
        }
        let v = &spec.eigenvectors;
        let wz = sigma_z_diagonal(n_sites, j);
        // Vᵀ diag(w) V
        let scaled = RealMatrix::from_fn(v.rows(), v.cols(), |a, b| wz[a] * v[(a, b)]);
        let w_eigen = v.transpose().matmul(&scaled);
        Ok(Self {
            spec,
            w_eigen,
            v_sign: sigma_z_diagonal(n_sites, i),
            i,
            j,
        })
    }

    /// `W(t)` in the computational basis.
    pub fn evolved_w(&self, t: f64) -> ComplexMatrix {
        let mut m = self.w_eigen.to_complex();
        apply_phases(&mut m, &self.spec.eigenvalues, t);
        from_eigenbasis(&m, self.spec)
    }

    pub fn value(&self, t: f64) -> f64 {
        let w = self.evolved_w(t);
        let d = w.rows();
        let mut acc = 0.0;
        for a in 0..d {
            let row = w.row(a);
            for b in 0..d {
                if self.v_sign[a] != self.v_sign[b] {
                    acc += row[b].norm_sqr();
                }
            }
        }
        2.0 * acc / d as f64
    }

    /// `1 − Re tr[W(t) V W(t) V] / D` evaluated literally.
    pub fn value_trace_form(&self, t: f64) -> f64 {
        let w = self.evolved_w(t);
        let d = w.rows();
        let mut tr = 0.0;
        // tr[W V W V] = Σ_ab W_ab v_b W_ba v_a
        for a in 0..d {
            for b in 0..d {
                tr += (w[(a, b)] * w[(b, a)]).re * self.v_sign[a] * self.v_sign[b];
            }
        }
        1.0 - tr / d as f64
    }
}

pub fn otoc(spec: &Spectrum, n_sites: usize, i: usize, j: usize, t: f64) -> Result<f64, DynamicsError> {
    Ok(OtocEngine::new(spec, n_sites, i, j)?.value(t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtocSeries {
    pub d: usize,
    pub i: usize,
    pub j: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub config: ChainConfig,
}

pub fn otoc_series(
    spec: &Spectrum,
    config: &ChainConfig,
    i: usize,
    j: usize,
    t_grid: &[f64],
) -> Result<OtocSeries, DynamicsError> {
    let engine = OtocEngine::new(spec, config.n_sites, i, j)?;
    let values = t_grid.par_iter().map(|&t| engine.value(t)).collect();
    Ok(OtocSeries {
        d: i.abs_diff(j),
        i,
        j,
        times: t_grid.to_vec(),
        values,
        config: *config,
    })
}

/// Same as [`otoc_series`] but evaluated from the Pauli-string Taylor
/// series; for early times where `C` is below the eigenbasis rounding floor.
pub fn otoc_series_short_time(config: &ChainConfig, i: usize, j: usize, t_grid: &[f64]) -> Result<OtocSeries, DynamicsError> {
    let t_max = t_grid.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let ex = OtocExpansion::new(config, i, j, t_max.max(f64::MIN_POSITIVE))?;
    Ok(OtocSeries {
        d: i.abs_diff(j),
        i,
        j,
        times: t_grid.to_vec(),
        values: t_grid.iter().map(|&t| ex.value(t)).collect(),
        config: *config,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Saturation {
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
}

/// Mean and standard deviation over the last decade of the time grid.
pub fn saturation(series: &OtocSeries) -> Saturation {
    let t_max = series.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tail: Vec<f64> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, _)| t >= t_max / 10.0)
        .map(|(_, &v)| v)
        .collect();
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Saturation {
        mean,
        std: var.sqrt(),
        samples: tail.len(),
    }
}

/// Which samples enter the early-growth fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaWindow {
    /// Values below this are rounding noise.
    pub floor: f64,
    /// Values above this are past the leading-order regime.
    pub ceiling: f64,
}

impl Default for KappaWindow {
    fn default() -> Self {
        Self {
            floor: 1e-24,
            ceiling: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaFit {
    pub kappa: f64,
    /// Exponent `2(2d + 1)` of the leading term.
    pub power: u32,
    pub points: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Free log-log slope over the same window.
    pub slope: f64,
    /// Relative size of a `t²` correction at `t_max` when `ln(C/f)` is fitted
    /// as `a + c t²`.
    pub next_order: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// κ in `C ≈ κ t^{2(2d+1)} / (2d+1)!`, fitted by least squares on `ln C`.
pub fn fit_kappa(series: &OtocSeries, window: KappaWindow) -> Result<KappaFit, DynamicsError> {
    let order = 2 * series.d as u32 + 1;
    let power = 2 * order;
    let norm = factorial(order);
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(&t, &c)| t > 0.0 && c > window.floor && c < window.ceiling)
        .map(|(&t, &c)| (t, c))
        .collect();
    if pts.len() < 10 {
        return Err(DynamicsError::WindowTooSmall { got: pts.len() });
    }
    let logs: Vec<f64> = pts
        .iter()
        .map(|&(t, c)| c.ln() - (f64::from(power) * t.ln() - norm.ln()))
        .collect();
    let ln_kappa = logs.iter().sum::<f64>() / logs.len() as f64;
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let cs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let slope = crate::numerics::loglog_slope(&ts, &cs).map_err(ModelError::from)?.slope();
    let t2: Vec<f64> = ts.iter().map(|t| t * t).collect();
    let corr = crate::numerics::polyfit(&t2, &logs, 1).map_err(ModelError::from)?;
    let t_max = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(KappaFit {
        kappa: ln_kappa.exp(),
        power,
        points: pts.len(),
        t_min: ts.iter().cloned().fold(f64::INFINITY, f64::min),
        t_max,
        slope,
        next_order: corr.slope() * t_max * t_max,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Prefactor with the exponent held fixed.
    pub b: f64,
    pub exponent: f64,
    /// Exponent from an unconstrained log-log fit.
    pub free_exponent: f64,
}

/// `κ(J_r) = b·J_r^exponent` with the exponent fixed, least squares on `ln κ`.
pub fn fit_kappa_scaling(j_ratios: &[f64], kappas: &[f64], exponent: f64) -> Result<PowerLawFit, DynamicsError> {
    let free = crate::numerics::loglog_slope(j_ratios, kappas).map_err(ModelError::from)?;
    let ln_b = j_ratios
        .iter()
        .zip(kappas)
        .map(|(j, k)| k.ln() - exponent * j.ln())
        .sum::<f64>()
        / kappas.len() as f64;
    Ok(PowerLawFit {
        b: ln_b.exp(),
        exponent,
        free_exponent: free.slope(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BchReport {
    /// Largest entrywise deviation for nested commutator orders 1, 2, 3.
    pub max_deviation: [f64; 3],
    pub tolerance: f64,
}

impl BchReport {
    pub fn passed(&self) -> bool {
        self.max_deviation.iter().all(|&d| d <= self.tolerance)
    }
}

/// Compares `[H, σz_1]`, `[H, [H, σz_1]]` and `[H, [H, [H, σz_1]]]` with
/// their closed Pauli forms.
pub fn verify_bch_commutators(cfg: &ChainConfig) -> Result<BchReport, DynamicsError> {
    let h = crate::model::build_hamiltonian(cfg)?.to_complex();
    let n = cfg.n_sites;
    let p = |site, axis| site_pauli(n, site, axis);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (hx, hz, j1) = (cfg.hx, cfg.hz, cfg.j1);

    let first = h.commutator(&p(1, Axis::Z));
    let second = h.commutator(&first);
    let third = h.commutator(&second);

    let x1 = p(1, Axis::X);
    let y1 = p(1, Axis::Y);
    let z1 = p(1, Axis::Z);
    let y2 = p(2, Axis::Y);
    let z2 = p(2, Axis::Z);
    let x1z2 = x1.matmul(&z2);
    let x1y2 = x1.matmul(&y2);
    let y1z2 = y1.matmul(&z2);

    let expect1 = y1.scaled(c(0.0, 2.0 * hx));
    let expect2 = &(&z1.scaled(c(4.0 * hx * hx, 0.0)) - &x1.scaled(c(4.0 * hx * hz, 0.0)))
        - &x1z2.scaled(c(4.0 * j1 * hx, 0.0));
    let expect3 = &(&y1.scaled(c(0.0, 8.0 * hx * (j1 * j1 + hx * hx + hz * hz)))
        - &x1y2.scaled(c(0.0, 8.0 * j1 * hx * hx)))
        + &y1z2.scaled(c(0.0, 16.0 * j1 * hx * hz));

    Ok(BchReport {
        max_deviation: [
            first.max_abs_diff(&expect1),
            second.max_abs_diff(&expect2),
            third.max_abs_diff(&expect3),
        ],
        tolerance: 1e-12,
    })
}
