//! The two-coupling transverse-field Ising chain, its dominant diagonal term
//! H0, and the off-diagonal weight diagnostic.
//!
//! Basis convention: state index `k = Σ (1 − s_i)/2 · 2^(N−i)`, so site 1 is
//! the most significant bit and `|↑↑…↑⟩` is index 0.

use crate::numerics::{kron, loglog_slope, pauli, polyfit, ComplexMatrix, FitResult, NumericsError, RealMatrix};
use thiserror::Error;

/// Largest supported chain; 2^13 = 8192 is the dense envelope.
pub const MAX_SITES: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("n_sites = {0} is even; the two coupling halves need an odd chain")]
    EvenSites(usize),
    #[error("n_sites = {0} exceeds the dense limit of {MAX_SITES}")]
    DimensionOverflow(usize),
    #[error("n_sites = {0} is below the minimum of 3")]
    TooFewSites(usize),
    #[error("{name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,
    #[error("alpha fit needs at least 5 configurations, got {0}")]
    TooFewConfigs(usize),
    #[error("alpha fit configurations differ in {0}")]
    MixedConfigs(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    pub n_sites: usize,
    pub j1: f64,
    /// J2 / J1.
    pub j_ratio: f64,
    pub hx: f64,
    pub hz: f64,
}

impl ChainConfig {
    pub fn new(n_sites: usize, j1: f64, j_ratio: f64, hx: f64, hz: f64) -> Result<Self, ModelError> {
        let cfg = Self {
            n_sites,
            j1,
            j_ratio,
            hx,
            hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// hx = 1.05, hz = 0.5, J1 = 1.
    pub fn standard(n_sites: usize, j_ratio: f64) -> Result<Self, ModelError> {
        Self::new(n_sites, 1.0, j_ratio, 1.05, 0.5)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_sites < 3 {
            return Err(ModelError::TooFewSites(self.n_sites));
        }
        if self.n_sites % 2 == 0 {
            return Err(ModelError::EvenSites(self.n_sites));
        }
        if self.n_sites > MAX_SITES {
            return Err(ModelError::DimensionOverflow(self.n_sites));
        }
        for (name, value) in [("j1", self.j1), ("hx", self.hx), ("hz", self.hz)] {
            if !value.is_finite() {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        // J_r = 0 is allowed (it switches H0 off); negative ratios are not
        if !(self.j_ratio >= 0.0) || !self.j_ratio.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "j_ratio",
                value: self.j_ratio,
            });
        }
        Ok(())
    }

    pub fn j2(&self) -> f64 {
        self.j1 * self.j_ratio
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn with_j_ratio(&self, j_ratio: f64) -> Self {
        Self { j_ratio, ..*self }
    }

    /// Coupling of bond (i, i+1), 1-based.
    pub fn bond_coupling(&self, i: usize) -> f64 {
        if i <= (self.n_sites - 1) / 2 {
            self.j1
        } else {
            self.j2()
        }
    }
}

/// Real-symmetric Hamiltonian in the computational basis.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub matrix: RealMatrix,
    pub config: ChainConfig,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        self.matrix.to_complex()
    }
}

/// σz eigenvalue (±1) of site `site` (1-based) in basis state `index`.
#[inline]
pub fn spin(index: usize, site: usize, n_sites: usize) -> f64 {
    if (index >> (n_sites - site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal of σz on one site.
pub fn sigma_z_diagonal(n_sites: usize, site: usize) -> Vec<f64> {
    (0..1usize << n_sites).map(|k| spin(k, site, n_sites)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-site Pauli operator σ^axis_site (1-based) embedded in the chain.
pub fn site_pauli(n_sites: usize, site: usize, axis: Axis) -> ComplexMatrix {
    assert!((1..=n_sites).contains(&site), "site {site} outside 1..={n_sites}");
    let local = match axis {
        Axis::X => pauli::x(),
        Axis::Y => pauli::y(),
        Axis::Z => pauli::z(),
    };
    let left = ComplexMatrix::identity(1 << (site - 1));
    let right = ComplexMatrix::identity(1 << (n_sites - site));
    kron(&kron(&left, &local), &right)
}

fn zz_diagonal(cfg: &ChainConfig, bonds: std::ops::RangeInclusive<usize>, index: usize) -> f64 {
    let n = cfg.n_sites;
    bonds
        .map(|i| -cfg.bond_coupling(i) * spin(index, i, n) * spin(index, i + 1, n))
        .sum()
}

pub fn build_hamiltonian(cfg: &ChainConfig) -> Result<HamiltonianMatrix, ModelError> {
    cfg.validate()?;
    let n = cfg.n_sites;
    let dim = cfg.dim();
    let mut m = RealMatrix::zeros(dim, dim);
    for k in 0..dim {
        let field: f64 = (1..=n).map(|i| spin(k, i, n)).sum();
        m[(k, k)] = zz_diagonal(cfg, 1..=n - 1, k) - cfg.hz * field;
        for i in 1..=n {
            m[(k, k ^ (1 << (n - i)))] = -cfg.hx;
        }
    }
    Ok(HamiltonianMatrix {
        matrix: m,
        config: *cfg,
    })
}

/// The J2 half of the Ising couplings, which dominates at large J_r.
pub fn build_h0(cfg: &ChainConfig) -> Result<HamiltonianMatrix, ModelError> {
    cfg.validate()?;
    let diag = h0_diagonal(cfg);
    Ok(HamiltonianMatrix {
        matrix: RealMatrix::from_diagonal(&diag),
        config: *cfg,
    })
}

fn h0_diagonal(cfg: &ChainConfig) -> Vec<f64> {
    let n = cfg.n_sites;
    let j2 = cfg.j2();
    (0..cfg.dim())
        .map(|k| {
            ((n + 1) / 2..=n - 1)
                .map(|i| -j2 * spin(k, i, n) * spin(k, i + 1, n))
                .sum()
        })
        .collect()
}

/// Basis states sorted by |H0 diagonal| ascending, ties by index.
pub fn h0_order(cfg: &ChainConfig) -> Vec<usize> {
    let diag = h0_diagonal(cfg);
    let mut order: Vec<usize> = (0..diag.len()).collect();
    // sort_by is stable, so equal magnitudes keep index order
    order.sort_by(|&a, &b| diag[a].abs().total_cmp(&diag[b].abs()));
    order
}

/// `PᵀHP` with `P` the [`h0_order`] permutation.
pub fn to_h0_basis(h: &HamiltonianMatrix) -> RealMatrix {
    h.matrix.permute_symmetric(&h0_order(&h.config))
}

/// `Σ_{i≠j} |H_ij|² / ‖H‖_F²`.
///
/// A basis permutation moves entries without changing which are diagonal, so
/// the value is the same in the computational and H0 orderings.
pub fn off_diagonal_weight(h: &HamiltonianMatrix) -> Result<f64, ModelError> {
    off_diagonal_weight_of(&h.matrix)
}

pub fn off_diagonal_weight_of(m: &RealMatrix) -> Result<f64, ModelError> {
    let total = m.frobenius_norm_sq();
    if total == 0.0 {
        return Err(ModelError::ZeroMatrix);
    }
    let diag: f64 = m.diagonal().iter().map(|d| d * d).sum();
    Ok(((total - diag) / total).max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub j_ratios: Vec<f64>,
    pub weights: Vec<f64>,
    pub fit: FitResult,
}

/// Exponent α of `W_off ∝ J_r^−α` across configurations that differ only in J_r.
pub fn fit_alpha(cfgs: &[ChainConfig]) -> Result<AlphaFit, ModelError> {
    if cfgs.len() < 5 {
        return Err(ModelError::TooFewConfigs(cfgs.len()));
    }
    let first = cfgs[0];
    for c in cfgs {
        if c.n_sites != first.n_sites {
            return Err(ModelError::MixedConfigs("n_sites"));
        }
        if c.j1 != first.j1 {
            return Err(ModelError::MixedConfigs("j1"));
        }
        if c.hx != first.hx {
            return Err(ModelError::MixedConfigs("hx"));
        }
        if c.hz != first.hz {
            return Err(ModelError::MixedConfigs("hz"));
        }
    }
    let weights = cfgs
        .iter()
        .map(|c| build_hamiltonian(c).and_then(|h| off_diagonal_weight(&h)))
        .collect::<Result<Vec<_>, _>>()?;
    let j_ratios: Vec<f64> = cfgs.iter().map(|c| c.j_ratio).collect();
    fit_alpha_samples(&j_ratios, &weights)
}

pub fn fit_alpha_samples(j_ratios: &[f64], weights: &[f64]) -> Result<AlphaFit, ModelError> {
    let fit = loglog_slope(j_ratios, weights)?;
    Ok(AlphaFit {
        alpha: -fit.slope(),
        j_ratios: j_ratios.to_vec(),
        weights: weights.to_vec(),
        fit,
    })
}

/// Fits α(N) linearly in 1/N; the intercept is the 1/N → 0 estimate.
pub fn extrapolate_alpha(n_sites: &[usize], alphas: &[f64]) -> Result<FitResult, ModelError> {
    let inv: Vec<f64> = n_sites.iter().map(|&n| 1.0 / n as f64).collect();
    Ok(polyfit(&inv, alphas, 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigvalsh_real;
    use proptest::prelude::*;

    fn cfg(n: usize, j1: f64, jr: f64, hx: f64, hz: f64) -> ChainConfig {
        ChainConfig::new(n, j1, jr, hx, hz).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(ChainConfig::new(4, 1.0, 1.0, 1.0, 0.0), Err(ModelError::EvenSites(4)));
        assert_eq!(ChainConfig::new(15, 1.0, 1.0, 1.0, 0.0), Err(ModelError::DimensionOverflow(15)));
        assert_eq!(ChainConfig::new(1, 1.0, 1.0, 1.0, 0.0), Err(ModelError::TooFewSites(1)));
        assert!(ChainConfig::new(5, 1.0, -1.0, 1.0, 0.0).is_err());
        let c = cfg(7, 1.5, 3.0, 1.0, 0.0);
        assert_eq!(c.j2(), 4.5);
        assert_eq!(c.bond_coupling(3), 1.5);
        assert_eq!(c.bond_coupling(4), 4.5);
    }

    #[test]
    fn classical_three_site_levels() {
        let h = build_hamiltonian(&cfg(3, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(h.matrix[(0, 0)], -2.0);
        // enumerate −(s1 s2 + s2 s3) independently
        for k in 0..8usize {
            let s: Vec<f64> = (0..3).map(|b| if (k >> (2 - b)) & 1 == 0 { 1.0 } else { -1.0 }).collect();
            assert_eq!(h.matrix[(k, k)], -(s[0] * s[1] + s[1] * s[2]));
        }
        let mut eig = eigvalsh_real(h.matrix.clone()).unwrap();
        eig.iter_mut().for_each(|e| *e = e.round());
        assert_eq!(eig, vec![-2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 2.0, 2.0]);
        assert_eq!(h.matrix.max_abs_diff(&RealMatrix::from_diagonal(&h.matrix.diagonal())), 0.0);
    }

    #[test]
    fn free_spins() {
        let h = build_hamiltonian(&cfg(3, 0.0, 1.0, 1.0, 0.0)).unwrap();
        let eig = eigvalsh_real(h.matrix).unwrap();
        let expect = [-3.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 3.0];
        for (a, b) in eig.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_kron_construction() {
        let c = cfg(5, 0.7, 2.3, 1.05, 0.5);
        let n = c.n_sites;
        let d = c.dim();
        let mut reference = ComplexMatrix::zeros(d, d);
        for i in 1..n {
            let zz = site_pauli(n, i, Axis::Z).matmul(&site_pauli(n, i + 1, Axis::Z));
            reference = &reference - &zz.scaled(c.bond_coupling(i).into());
        }
        for i in 1..=n {
            reference = &reference - &site_pauli(n, i, Axis::X).scaled(c.hx.into());
            reference = &reference - &site_pauli(n, i, Axis::Z).scaled(c.hz.into());
        }
        let h = build_hamiltonian(&c).unwrap().to_complex();
        assert!(h.max_abs_diff(&reference) < 1e-14);
    }

    #[test]
    fn h0_is_right_half_couplings() {
        let c = cfg(3, 1.0, 2.0, 1.05, 0.5);
        let h0 = build_h0(&c).unwrap();
        for k in 0..8 {
            let s2 = spin(k, 2, 3);
            let s3 = spin(k, 3, 3);
            assert_eq!(h0.matrix[(k, k)], -2.0 * s2 * s3);
        }
        let zero = build_h0(&cfg(5, 1.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(zero.matrix.max_abs(), 0.0);
    }

    #[test]
    fn h0_share_grows_with_ratio() {
        let mut prev = f64::INFINITY;
        for jr in [1.0, 10.0, 100.0] {
            let c = cfg(7, 1.0, jr, 1.05, 0.5);
            let h = build_hamiltonian(&c).unwrap().matrix;
            let h0 = build_h0(&c).unwrap().matrix;
            let rel = (&h - &h0).frobenius_norm() / h.frobenius_norm();
            assert!(rel < prev);
            prev = rel;
        }
    }

    #[test]
    fn h0_basis_ordering() {
        let c = cfg(7, 1.0, 10.0, 1.05, 0.5);
        let h0 = build_h0(&c).unwrap();
        let p = to_h0_basis(&h0);
        let d = p.diagonal();
        assert!(d.windows(2).all(|w| w[0].abs() <= w[1].abs()));
        let order = h0_order(&c);
        let diag = h0.matrix.diagonal();
        for w in order.windows(2) {
            if diag[w[0]].abs() == diag[w[1]].abs() {
                assert!(w[0] < w[1]);
            }
        }
        // the full H keeps its entry multiset
        let h = build_hamiltonian(&c.with_j_ratio(1.0)).unwrap();
        let mut a = h.matrix.as_slice().to_vec();
        let mut b = to_h0_basis(&h).as_slice().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn off_diagonal_weight_limits() {
        let diag = build_hamiltonian(&cfg(5, 1.0, 2.0, 0.0, 0.3)).unwrap();
        assert_eq!(off_diagonal_weight(&diag).unwrap(), 0.0);
        let flip = build_hamiltonian(&cfg(5, 0.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((off_diagonal_weight(&flip).unwrap() - 1.0).abs() < 1e-15);
        let zero = build_hamiltonian(&cfg(3, 0.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(off_diagonal_weight(&zero), Err(ModelError::ZeroMatrix));
    }

    #[test]
    fn off_diagonal_weight_same_in_h0_basis() {
        let h = build_hamiltonian(&cfg(7, 1.0, 3.0, 1.05, 0.5)).unwrap();
        let direct = off_diagonal_weight(&h).unwrap();
        let m = to_h0_basis(&h);
        let norm = m.frobenius_norm_sq();
        let mut off = 0.0;
        let mut on = 0.0;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m[(i, j)] * m[(i, j)] / norm;
                if i == j {
                    on += v;
                } else {
                    off += v;
                }
            }
        }
        assert!((direct - off).abs() < 1e-14);
        assert!((off + on - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_closed_form() {
        // ‖H‖² splits into N·hx² off the diagonal per row and, on it,
        // Σ bonds J² + N·hz² (all cross terms are traceless)
        for (n, jr) in [(3, 1.0), (7, 2.5), (9, 40.0)] {
            let c = cfg(n, 1.0, jr, 1.05, 0.5);
            let nf = n as f64;
            let half = (nf - 1.0) / 2.0;
            let off = nf * c.hx * c.hx;
            let oracle = off / (off + nf * c.hz * c.hz + half * (c.j1.powi(2) + c.j2().powi(2)));
            let w = off_diagonal_weight(&build_hamiltonian(&c).unwrap()).unwrap();
            assert!((w - oracle).abs() < 1e-13, "{w} vs {oracle}");
        }
    }

    #[test]
    fn alpha_of_exact_power_law() {
        let jr = [1.0, 2.0, 4.0, 8.0, 16.0];
        let w: Vec<f64> = jr.iter().map(|j: &f64| j.powi(-2)).collect();
        let fit = fit_alpha_samples(&jr, &w).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-12);
        let ex = extrapolate_alpha(&[5, 7, 9], &[1.0 + 2.0 / 5.0, 1.0 + 2.0 / 7.0, 1.0 + 2.0 / 9.0]).unwrap();
        assert!((ex.intercept() - 1.0).abs() < 1e-12);
        let cfgs: Vec<_> = [5.0, 10.0].iter().map(|&j| cfg(5, 1.0, j, 1.0, 0.5)).collect();
        assert_eq!(fit_alpha(&cfgs).unwrap_err(), ModelError::TooFewConfigs(2));
        let mut mixed: Vec<_> = (1..=5).map(|j| cfg(5, 1.0, j as f64, 1.0, 0.5)).collect();
        mixed[3].hz = 0.1;
        assert_eq!(fit_alpha(&mixed).unwrap_err(), ModelError::MixedConfigs("hz"));
    }

    #[test]
    fn weight_decays_at_large_ratio() {
        let cfgs: Vec<_> = [5.0, 10.0, 20.0, 40.0, 80.0].iter().map(|&j| cfg(5, 1.0, j, 1.05, 0.5)).collect();
        let fit = fit_alpha(&cfgs).unwrap();
        assert!(fit.alpha > 1.0, "alpha {}", fit.alpha);
    }

    fn reverse_bits(k: usize, n: usize) -> usize {
        (0..n).fold(0, |acc, b| acc | (((k >> b) & 1) << (n - 1 - b)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reflection_swaps_halves(j1 in 0.1f64..3.0, jr in 0.1f64..5.0, hx in -2.0f64..2.0, hz in -2.0f64..2.0, half in 1usize..4) {
            let n = 2 * half + 1;
            let a = build_hamiltonian(&cfg(n, j1, jr, hx, hz)).unwrap();
            // swap J1 <-> J2
            let b = build_hamiltonian(&cfg(n, j1 * jr, 1.0 / jr, hx, hz)).unwrap();
            let perm: Vec<usize> = (0..1usize << n).map(|k| reverse_bits(k, n)).collect();
            let reflected = a.matrix.permute_symmetric(&perm);
            prop_assert!(reflected.max_abs_diff(&b.matrix) < 1e-12);
        }

        #[test]
        fn traceless(j1 in -3.0f64..3.0, jr in 0.0f64..10.0, hx in -2.0f64..2.0, hz in -2.0f64..2.0, half in 1usize..5) {
            let h = build_hamiltonian(&cfg(2 * half + 1, j1, jr, hx, hz)).unwrap();
            prop_assert!(h.matrix.trace().abs() < 1e-9);
            prop_assert!(h.matrix.hermiticity_defect() == 0.0);
        }

        #[test]
        fn weight_scale_invariant(c in 0.01f64..100.0, neg in proptest::bool::ANY, jr in 0.5f64..20.0) {
            let h = build_hamiltonian(&cfg(5, 1.0, jr, 1.05, 0.5)).unwrap();
            let c = if neg { -c } else { c };
            let scaled = h.matrix.scaled(c);
            let a = off_diagonal_weight(&h).unwrap();
            let b = off_diagonal_weight_of(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn zero_field_spectrum_is_symmetric(hx in 0.1f64..2.0, half in 1usize..4) {
            let h = build_hamiltonian(&cfg(2 * half + 1, 1.0, 1.0, hx, 0.0)).unwrap();
            let e = eigvalsh_real(h.matrix).unwrap();
            let m = e.len();
            for k in 0..m {
                prop_assert!((e[k] + e[m - 1 - k]).abs() < 1e-9);
            }
        }
    }
}
