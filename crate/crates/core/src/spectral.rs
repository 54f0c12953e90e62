//! Level statistics: unfolding, the spacing ratio r, the filtered spectral
//! form factor, Thouless time and the g-metric.

use crate::numerics::{eigvalsh_real, polyfit, FitResult, NumericsError, RealMatrix};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

pub const DEFAULT_UNFOLD_DEGREE: usize = 10;
pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_WINDOW: usize = 51;
pub const DEFAULT_THOULESS_TOLERANCE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("no well-defined spacing ratio: {zero_pairs} ratios involve a zero spacing")]
    DegenerateSpectrum { zero_pairs: usize },
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("time grid must be positive and ascending")]
    BadGrid,
    #[error("moving-average window must be odd and positive, got {0}")]
    BadWindow(usize),
    #[error("{name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("grid starts at {0}; Thouless detection needs two decades below t = 1")]
    GridTooShort(f64),
    #[error("SFF never stays within tolerance of the GOE curve before t = 1")]
    NoIntersection,
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedSpectrum {
    pub epsilons: Vec<f64>,
    /// Staircase fit in the rescaled variable `x ∈ [−1, 1]`.
    pub fit: FitResult,
}

impl UnfoldedSpectrum {
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn mean_spacing(&self) -> f64 {
        mean_spacing(&self.epsilons)
    }
}

fn mean_spacing(levels: &[f64]) -> f64 {
    (levels[levels.len() - 1] - levels[0]) / (levels.len() - 1) as f64
}

fn sorted(eigs: &[f64]) -> Vec<f64> {
    let mut v = eigs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Maps levels through a polynomial fit of the cumulative count so that the
/// mean spacing is 1.
pub fn unfold(eigs: &[f64], degree: usize) -> Result<UnfoldedSpectrum, SpectralError> {
    if eigs.len() < degree + 2 {
        return Err(SpectralError::TooFewLevels {
            needed: degree + 2,
            got: eigs.len(),
        });
    }
    let levels = sorted(eigs);
    let lo = levels[0];
    let hi = levels[levels.len() - 1];
    if hi == lo {
        return Err(NumericsError::IllConditioned {
            condition: f64::INFINITY,
        }
        .into());
    }
    let xs: Vec<f64> = levels.iter().map(|e| 2.0 * (e - lo) / (hi - lo) - 1.0).collect();
    let counts: Vec<f64> = (0..levels.len()).map(|i| i as f64).collect();
    let fit = polyfit(&xs, &counts, degree)?;
    let mut epsilons: Vec<f64> = xs.iter().map(|&x| fit.eval(x)).collect();
    // polynomial wiggle can reorder neighbours
    epsilons.sort_by(f64::total_cmp);
    let s = mean_spacing(&epsilons);
    if !(s > 0.0) {
        return Err(NumericsError::IllConditioned {
            condition: f64::INFINITY,
        }
        .into());
    }
    epsilons.iter_mut().for_each(|e| *e /= s);
    Ok(UnfoldedSpectrum { epsilons, fit })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RStatistic {
    pub mean: f64,
    /// Number of ratios that entered the mean.
    pub ratios: usize,
    /// Ratios skipped because one of their spacings was exactly zero.
    pub zero_pairs: usize,
}

/// Mean of `min(s_i, s_{i−1}) / max(s_i, s_{i−1})` over consecutive spacings.
pub fn r_statistic(eigs: &[f64]) -> Result<RStatistic, SpectralError> {
    if eigs.len() < 3 {
        return Err(SpectralError::TooFewLevels {
            needed: 3,
            got: eigs.len(),
        });
    }
    let levels = sorted(eigs);
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sum = 0.0;
    let mut ratios = 0;
    let mut zero_pairs = 0;
    for w in spacings.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 || b == 0.0 {
            zero_pairs += 1;
            continue;
        }
        sum += a.min(b) / a.max(b);
        ratios += 1;
    }
    if ratios == 0 {
        return Err(SpectralError::DegenerateSpectrum { zero_pairs });
    }
    Ok(RStatistic {
        mean: sum / ratios as f64,
        ratios,
        zero_pairs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SffCurve {
    pub times: Vec<f64>,
    pub raw: Vec<f64>,
    /// Moving average of `raw`.
    pub values: Vec<f64>,
    pub window: usize,
}

impl SffCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean of the last 5% of smoothed samples.
    pub fn tail_mean(&self) -> f64 {
        let k = (self.values.len() / 20).max(1);
        let tail = &self.values[self.values.len() - k..];
        tail.iter().sum::<f64>() / k as f64
    }
}

/// Gaussian edge filter `exp(−(ε − ε̄)² / (2η²Γ²))` with ε̄, Γ² the mean and
/// variance of the levels.
pub fn gaussian_filter(epsilons: &[f64], eta: f64) -> Vec<f64> {
    let n = epsilons.len() as f64;
    let mean = epsilons.iter().sum::<f64>() / n;
    let var = epsilons.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return vec![1.0; epsilons.len()];
    }
    epsilons
        .iter()
        .map(|e| (-(e - mean).powi(2) / (2.0 * eta * eta * var)).exp())
        .collect()
}

/// Filtered form factor `|Σ ρ_α e^{−2πiε_α t}|² / Σ ρ_α²`, then a centered
/// moving average of `window` samples.
///
/// Dividing by `Σρ²` rather than `(Σρ)²` is what makes the late-time plateau
/// equal 1: there the cross terms dephase and only the diagonal survives.
pub fn sff(unfolded: &UnfoldedSpectrum, eta: f64, t_grid: &[f64], window: usize) -> Result<SffCurve, SpectralError> {
    if t_grid.is_empty() {
        return Err(SpectralError::EmptyGrid);
    }
    if !(t_grid[0] > 0.0) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectralError::BadGrid);
    }
    if window % 2 == 0 {
        return Err(SpectralError::BadWindow(window));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SpectralError::InvalidParameter { name: "eta", value: eta });
    }
    if unfolded.is_empty() {
        return Err(SpectralError::TooFewLevels { needed: 1, got: 0 });
    }
    let rho = gaussian_filter(&unfolded.epsilons, eta);
    let z: f64 = rho.iter().map(|r| r * r).sum();
    let levels: Vec<(f64, f64)> = unfolded
        .epsilons
        .iter()
        .zip(&rho)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&e, &r)| (e, r))
        .collect();
    let raw: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(e, r) in &levels {
                // reduce the phase first; ε·t reaches ~10⁵ at the largest grids
                let phase = 2.0 * PI * (e * t).fract();
                let (s, c) = phase.sin_cos();
                re += r * c;
                im -= r * s;
            }
            (re * re + im * im) / z
        })
        .collect();
    let values = moving_average(&raw, window);
    Ok(SffCurve {
        times: t_grid.to_vec(),
        raw,
        values,
        window,
    })
}

/// Centered moving average whose half-width shrinks symmetrically near the
/// ends.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = xs.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in xs {
        acc += x;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            if h == 0 {
                return xs[i];
            }
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

/// GOE form factor: `2t − t ln(1 + 2t)` up to the Heisenberg time and
/// `2 − t ln((2t + 1)/(2t − 1))` after it.
pub fn sff_goe(t: f64) -> f64 {
    if t <= 1.0 {
        2.0 * t - t * (2.0 * t).ln_1p()
    } else {
        2.0 - t * ((2.0 * t + 1.0) / (2.0 * t - 1.0)).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThoulessParams {
    /// Relative tolerance against the GOE curve.
    pub tolerance: f64,
    /// Consecutive samples that must stay within tolerance.
    pub run: usize,
}

impl ThoulessParams {
    pub fn for_window(window: usize) -> Self {
        Self {
            tolerance: DEFAULT_THOULESS_TOLERANCE,
            run: window,
        }
    }
}

/// Earliest grid time from which the smoothed SFF stays within
/// `params.tolerance` (relative) of the GOE curve for `params.run` samples.
pub fn thouless_time(curve: &SffCurve, params: ThoulessParams) -> Result<f64, SpectralError> {
    if curve.is_empty() {
        return Err(SpectralError::EmptyGrid);
    }
    if curve.times[0] > 0.01 {
        return Err(SpectralError::GridTooShort(curve.times[0]));
    }
    let run = params.run.max(1);
    let mut streak = 0;
    for (i, (&t, &v)) in curve.times.iter().zip(&curve.values).enumerate() {
        let goe = sff_goe(t);
        if ((v - goe) / goe).abs() < params.tolerance {
            streak += 1;
            if streak == run {
                let start = i + 1 - run;
                let t_star = curve.times[start];
                return if t_star <= 1.0 {
                    Ok(t_star)
                } else {
                    Err(SpectralError::NoIntersection)
                };
            }
        } else {
            streak = 0;
            if t > 1.0 {
                break;
            }
        }
    }
    Err(SpectralError::NoIntersection)
}

/// `g = −log10(t_Th)` in units of the Heisenberg time.
pub fn g_metric(t_th: f64) -> Result<f64, SpectralError> {
    if !(t_th > 0.0) {
        return Err(SpectralError::NonPositiveTime(t_th));
    }
    Ok(-t_th.log10())
}

/// Uniform grid of `count` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Levels with i.i.d. unit-mean exponential spacings.
pub fn poisson_levels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut e = 0.0;
    (0..n)
        .map(|_| {
            let s: f64 = rng.sample(Exp1);
            e += s;
            e
        })
        .collect()
}

/// Real symmetric matrix with N(0, 1) off-diagonal and N(0, 2) diagonal entries.
pub fn goe_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RealMatrix {
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g: f64 = rng.sample(StandardNormal);
            let g = if i == j { g * std::f64::consts::SQRT_2 } else { g };
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
    }
    m
}

pub fn goe_levels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    eigvalsh_real(goe_matrix(n, rng)).expect("GOE sample is symmetric")
}
