//! Scalars built on a Krylov decomposition: coefficient dispersion,
//! complexity, spread, IPR, the infinite-time average, and the seed
//! operators used throughout.

use super::{same_basis, Frame, HsVector, KrylovDecomposition, KrylovError};
use crate::dynamics::{from_eigenbasis, to_eigenbasis};
use crate::model::{site_pauli, Axis};
use crate::numerics::{haar_qubit_unitary, kron, seeded_rng, ComplexMatrix, Spectrum};
use num_complex::Complex64;

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Moving-average parameters for [`bn_dispersion`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionParams {
    pub n0: usize,
    pub w: usize,
    /// Set when [`DispersionParams::for_length`] shrank the defaults.
    pub auto_scaled: bool,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self {
            n0: 100,
            w: 400,
            auto_scaled: false,
        }
    }
}

impl DispersionParams {
    /// Defaults, or `(10, 40)` for sequences shorter than 1000.
    pub fn for_length(k: usize) -> Self {
        if k < 1000 {
            Self {
                n0: 10,
                w: 40,
                auto_scaled: true,
            }
        } else {
            Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dispersion {
    pub sigma: f64,
    pub inverse: f64,
    pub params: DispersionParams,
}

/// Standard deviation of `b_n` about a centered moving average.
///
/// The window `[n − w, n + w]` uses trapezoid weights (endpoints ½) so its
/// total weight is exactly `2w`; near the edges it shrinks symmetrically.
/// The sum runs over `n0 ≤ n ≤ K − 1 − w`.
pub fn bn_dispersion(b: &[f64], params: DispersionParams) -> Result<Dispersion, KrylovError> {
    let DispersionParams { n0, w, .. } = params;
    let k = b.len();
    if k <= n0 + 2 * w || w == 0 {
        return Err(KrylovError::SequenceTooShort {
            needed: n0 + 2 * w,
            got: k,
        });
    }
    let local_mean = |n: usize| {
        let wn = w.min(n).min(k - 1 - n);
        if wn == 0 {
            return b[n];
        }
        let inner: f64 = b[n - wn + 1..n + wn].iter().sum();
        (inner + 0.5 * (b[n - wn] + b[n + wn])) / (2 * wn) as f64
    };
    let last = k - 1 - w;
    let count = (last + 1 - n0) as f64;
    let var = (n0..=last).map(|n| (b[n] - local_mean(n)).powi(2)).sum::<f64>() / count;
    let sigma = var.sqrt();
    Ok(Dispersion {
        sigma,
        inverse: 1.0 / sigma,
        params,
    })
}

fn check_normalized(phis: &[Complex64]) -> Result<(), KrylovError> {
    let total: f64 = phis.iter().map(|z| z.norm_sqr()).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(KrylovError::NotNormalized { total });
    }
    Ok(())
}

/// `𝒦_C = Σ n |φ_n|²`.
pub fn krylov_complexity(phis: &[Complex64]) -> Result<f64, KrylovError> {
    check_normalized(phis)?;
    Ok(phis.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum())
}

/// `S_𝒦 = 1 / (K Σ |φ_n|⁴)`, in `[1/K, 1]`.
pub fn spread_measure(phis: &[Complex64], k_max: usize) -> Result<f64, KrylovError> {
    check_normalized(phis)?;
    if k_max == 0 || k_max < phis.len() {
        return Err(KrylovError::InvalidParameter {
            name: "k_max",
            value: k_max as f64,
        });
    }
    let p4: f64 = phis.iter().map(|z| z.norm_sqr().powi(2)).sum();
    Ok(1.0 / (k_max as f64 * p4))
}

/// `(1/D) Σ_i |⟨φ_i|O|φ_i⟩|²` for HS-normalized `O`.
pub fn ipr(o: &HsVector, spec: &Spectrum) -> Result<f64, KrylovError> {
    let d = spec.dim();
    if o.dim() != d {
        return Err(KrylovError::DimensionMismatch { expected: d, got: o.dim() });
    }
    if (o.norm() - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(KrylovError::NotNormalized { total: o.norm() * o.norm() });
    }
    // diagonal of Vᵀ O V, one eigenvector at a time
    let v = &spec.eigenvectors;
    let m = o.matrix();
    let mut sum = 0.0;
    for i in 0..d {
        let col = v.column(i);
        let ocol = m.mat_vec(&col.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
        let e: Complex64 = col.iter().zip(&ocol).map(|(&a, &b)| b * a).sum();
        sum += e.norm_sqr();
    }
    Ok(sum / d as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeAverage {
    /// `𝒦̄_C = Σ n |φ̄_n|²`.
    pub kbar: f64,
    /// `|φ̄_n|²`.
    pub weights: Vec<f64>,
    /// Gap classes with more than one `(α, β)` pair, the zero gap excluded.
    pub degenerate_groups: usize,
    /// Diagonal pairs `α ≠ β` with coinciding energies.
    pub degenerate_levels: usize,
}

/// Infinite-time average of `|φ_n(t)|²`.
///
/// In the eigenbasis `φ_n(t) = Σ_g e^{iω_g t} c_{n,g}` with
/// `c_{n,g} = (1/D) Σ_{(α,β) ∈ g} conj(𝒲̃_n,αβ) Õ_αβ`, summed over gap
/// classes `g`. Dephasing leaves `|φ̄_n|² = Σ_g |c_{n,g}|²`. Gaps closer
/// than `gap_tol` are merged.
pub fn time_averaged_complexity(
    o: &HsVector,
    spec: &Spectrum,
    dec: &KrylovDecomposition,
    gap_tol: f64,
) -> Result<TimeAverage, KrylovError> {
    let d = spec.dim();
    if o.dim() != d || dec.dim != d {
        return Err(KrylovError::DimensionMismatch { expected: d, got: o.dim() });
    }
    let e = &spec.eigenvalues;
    let mut pairs: Vec<(f64, usize)> = (0..d * d).map(|p| (e[p / d] - e[p % d], p)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut group = vec![0usize; d * d];
    let mut sizes = vec![1usize];
    let mut zero_group = None;
    let mut start = pairs[0].0;
    for (idx, &(gap, p)) in pairs.iter().enumerate() {
        if idx > 0 {
            if gap - start > gap_tol {
                sizes.push(1);
                start = gap;
            } else {
                *sizes.last_mut().unwrap() += 1;
            }
        }
        let g = sizes.len() - 1;
        group[p] = g;
        if p / d == p % d {
            zero_group = Some(g);
        }
    }
    let zero_group = zero_group.expect("diagonal pairs exist");
    let degenerate_groups = sizes.iter().enumerate().filter(|&(g, &s)| g != zero_group && s > 1).count();
    let degenerate_levels = sizes[zero_group] - d;

    let ot = to_eigenbasis(o.matrix(), spec);
    let ot = ot.as_slice();
    let mut weights = Vec::with_capacity(dec.len());
    let mut c = vec![Complex64::new(0.0, 0.0); sizes.len()];
    let mut touched = Vec::new();
    let mut failure = None;
    dec.basis.for_each(|_, w| {
        let raw = ComplexMatrix::from_vec(d, d, w.to_vec());
        let wt = match &dec.frame {
            Frame::Energy(own) if same_basis(own, spec) => raw,
            Frame::Energy(own) => to_eigenbasis(&from_eigenbasis(&raw, own), spec),
            Frame::Computational => to_eigenbasis(&raw, spec),
        };
        touched.clear();
        for (p, (&x, &y)) in wt.as_slice().iter().zip(ot).enumerate() {
            let z = x.conj() * y;
            if z.re == 0.0 && z.im == 0.0 {
                continue;
            }
            let g = group[p];
            if c[g].re == 0.0 && c[g].im == 0.0 {
                touched.push(g);
            }
            c[g] += z;
        }
        let mut s = 0.0;
        for &g in &touched {
            s += c[g].norm_sqr();
            c[g] = Complex64::new(0.0, 0.0);
        }
        weights.push(s / (d * d) as f64);
        if !s.is_finite() {
            failure = Some(s);
        }
    })?;
    if let Some(total) = failure {
        return Err(KrylovError::NotNormalized { total });
    }
    let kbar = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    Ok(TimeAverage {
        kbar,
        weights,
        degenerate_groups,
        degenerate_levels,
    })
}

fn two_site_z(n: usize, a: usize, b: usize) -> Result<HsVector, KrylovError> {
    if n < 3 || a == 0 || b == 0 || a > n || b > n || a == b {
        return Err(KrylovError::InvalidParameter {
            name: "n_sites",
            value: n as f64,
        });
    }
    HsVector::normalized(&site_pauli(n, a, Axis::Z) + &site_pauli(n, b, Axis::Z))
}

/// `(σz₁ + σz_N)/√2`.
pub fn operator_o1(n: usize) -> Result<HsVector, KrylovError> {
    two_site_z(n, 1, n)
}

/// `(σz₁ + σz_{(N−1)/2})/√2`.
pub fn operator_o2(n: usize) -> Result<HsVector, KrylovError> {
    two_site_z(n, 1, (n - 1) / 2)
}

/// `⊗ u_i` of independent Haar `U(2)` draws, HS-normalized.
pub fn random_product_operator(n: usize, seed: u64) -> HsVector {
    let mut rng = seeded_rng(seed);
    let mut m = haar_qubit_unitary(&mut rng);
    for _ in 1..n {
        m = kron(&m, &haar_qubit_unitary(&mut rng));
    }
    HsVector::normalized(m).expect("unitaries are nonzero")
}
