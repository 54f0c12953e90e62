//! Bipartite von Neumann entanglement of eigenstates and quench states.

use crate::model::{build_hamiltonian, ChainConfig, ModelError};
use crate::numerics::{eigvalsh_real, lowest_eigenpair, ComplexMatrix, NumericsError, RealMatrix, Spectrum, TimeSeries};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Eigenvalues of `ρ` down to this are clamped to zero.
pub const CLAMP: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EntanglementError {
    #[error("cut {cut} is outside 1..={max}")]
    CutOutOfRange { cut: usize, max: usize },
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("state has {got} amplitudes, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state norm² is {0}, expected 1")]
    NotNormalized(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_sites: usize,
}

impl StateVector {
    /// Requires `2^n` amplitudes with unit norm to 1e-12.
    pub fn new(amplitudes: Vec<Complex64>, n_sites: usize) -> Result<Self, EntanglementError> {
        let expected = 1usize << n_sites;
        if amplitudes.len() != expected {
            return Err(EntanglementError::DimensionMismatch {
                expected,
                got: amplitudes.len(),
            });
        }
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(EntanglementError::NotNormalized(norm2));
        }
        Ok(Self { amplitudes, n_sites })
    }

    pub fn from_real(amplitudes: &[f64], n_sites: usize) -> Result<Self, EntanglementError> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(), n_sites)
    }

    /// Rescales to unit norm first.
    pub fn normalized(mut amplitudes: Vec<Complex64>, n_sites: usize) -> Result<Self, EntanglementError> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EntanglementError::NotNormalized(0.0));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(amplitudes, n_sites)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn scaled(&self, phase: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * phase).collect(),
            n_sites: self.n_sites,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    AllDown,
    Neel,
    AllUp,
}

impl NamedState {
    pub fn label(self) -> &'static str {
        match self {
            NamedState::AllDown => "all_down",
            NamedState::Neel => "neel",
            NamedState::AllUp => "all_up",
        }
    }
}

/// Computational basis state; the Néel state is `↑↓↑…` from site 1.
pub fn named_state(kind: NamedState, n_sites: usize) -> StateVector {
    let d = 1usize << n_sites;
    // a set bit N − i means site i points down
    let index = match kind {
        NamedState::AllUp => 0,
        NamedState::AllDown => d - 1,
        NamedState::Neel => (1..=n_sites).filter(|i| i % 2 == 0).map(|i| 1 << (n_sites - i)).sum(),
    };
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); d];
    amplitudes[index] = Complex64::new(1.0, 0.0);
    StateVector { amplitudes, n_sites }
}

/// The cut used throughout for odd chains: between sites `(N−1)/2` and `(N+1)/2`.
pub fn central_cut(n_sites: usize) -> usize {
    (n_sites - 1) / 2
}

fn check_cut(n_sites: usize, cut: usize) -> Result<(), EntanglementError> {
    if cut == 0 || cut >= n_sites {
        return Err(EntanglementError::CutOutOfRange {
            cut,
            max: n_sites.saturating_sub(1),
        });
    }
    Ok(())
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|` for `A` = sites `1..=cut`.
pub fn reduced_density_matrix(psi: &StateVector, cut: usize) -> Result<ComplexMatrix, EntanglementError> {
    check_cut(psi.n_sites, cut)?;
    let da = 1usize << cut;
    let db = 1usize << (psi.n_sites - cut);
    let m = &psi.amplitudes;
    Ok(ComplexMatrix::from_fn(da, da, |a, b| {
        let ra = &m[a * db..(a + 1) * db];
        let rb = &m[b * db..(b + 1) * db];
        ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum()
    }))
}

/// `ρ_B = Tr_A |ψ⟩⟨ψ|` for `B` = sites `cut+1..=N`.
pub fn reduced_density_matrix_right(psi: &StateVector, cut: usize) -> Result<ComplexMatrix, EntanglementError> {
    check_cut(psi.n_sites, cut)?;
    let da = 1usize << cut;
    let db = 1usize << (psi.n_sites - cut);
    let m = &psi.amplitudes;
    Ok(ComplexMatrix::from_fn(db, db, |c, e| {
        (0..da).map(|a| m[a * db + c] * m[a * db + e].conj()).sum()
    }))
}

/// Eigenvalues of a Hermitian matrix, ascending. Real input goes straight to
/// the symmetric solver; complex input through the real embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum is the original one doubled.
fn hermitian_eigenvalues(rho: &ComplexMatrix) -> Result<Vec<f64>, NumericsError> {
    let n = rho.rows();
    if rho.max_imag() == 0.0 {
        return eigvalsh_real(rho.real_part());
    }
    let big = RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = rho[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    Ok(eigvalsh_real(big)?.into_iter().step_by(2).collect())
}

/// `S = −Σ p ln p`, natural log, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64, EntanglementError> {
    if !rho.is_square() {
        return Err(EntanglementError::NotDensityMatrix(format!("{}x{} is not square", rho.rows(), rho.cols())));
    }
    let defect = rho.hermiticity_defect();
    if defect > 1e-10 {
        return Err(EntanglementError::NotDensityMatrix(format!("hermiticity defect {defect:e}")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-10 {
        return Err(EntanglementError::NotDensityMatrix(format!("trace {}", tr.re)));
    }
    let ps = hermitian_eigenvalues(rho)?;
    if let Some(&p) = ps.iter().find(|&&p| p < -CLAMP) {
        return Err(EntanglementError::NotDensityMatrix(format!("eigenvalue {p:e}")));
    }
    Ok(ps.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum())
}

/// Entropy across `cut`, computed on whichever side is smaller.
pub fn entanglement_entropy(psi: &StateVector, cut: usize) -> Result<f64, EntanglementError> {
    check_cut(psi.n_sites, cut)?;
    let rho = if 2 * cut <= psi.n_sites {
        reduced_density_matrix(psi, cut)?
    } else {
        reduced_density_matrix_right(psi, cut)?
    };
    von_neumann_entropy(&rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementScan {
    pub energies: Vec<f64>,
    pub entropies: Vec<f64>,
    pub cut: usize,
}

impl EntanglementScan {
    pub fn median(&self) -> f64 {
        let mut s = self.entropies.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        }
    }
}

/// `(E_k, S_k)` for every eigenvector of `spec`.
pub fn eigenstate_entanglement_scan(spec: &Spectrum, n_sites: usize, cut: usize) -> Result<EntanglementScan, EntanglementError> {
    check_cut(n_sites, cut)?;
    if spec.dim() != 1 << n_sites {
        return Err(EntanglementError::DimensionMismatch {
            expected: 1 << n_sites,
            got: spec.dim(),
        });
    }
    let entropies = (0..spec.dim())
        .into_par_iter()
        .map(|k| {
            let psi = StateVector::normalized(
                spec.eigenvector(k).into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                n_sites,
            )?;
            entanglement_entropy(&psi, cut)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EntanglementScan {
        energies: spec.eigenvalues.clone(),
        entropies,
        cut,
    })
}

/// `S(t)` for `|ψ(t)⟩ = V e^{−iΛt} Vᵀ |ψ₀⟩`.
pub fn quench_entropy_series(psi0: &StateVector, spec: &Spectrum, cut: usize, t_grid: &[f64]) -> Result<TimeSeries, EntanglementError> {
    let n = psi0.n_sites;
    check_cut(n, cut)?;
    let d = spec.dim();
    if psi0.amplitudes.len() != d {
        return Err(EntanglementError::DimensionMismatch {
            expected: d,
            got: psi0.amplitudes.len(),
        });
    }
    let v = &spec.eigenvectors;
    // c_k = ⟨φ_k|ψ₀⟩
    let coeffs: Vec<Complex64> = (0..d)
        .map(|k| (0..d).map(|i| psi0.amplitudes[i] * v[(i, k)]).sum())
        .collect();
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let phased: Vec<Complex64> = coeffs
                .iter()
                .zip(&spec.eigenvalues)
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
                .collect();
            let amps: Vec<Complex64> = (0..d)
                .map(|i| v.row(i).iter().zip(&phased).map(|(&x, c)| c * x).sum())
                .collect();
            entanglement_entropy(&StateVector::normalized(amps, n)?, cut)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TimeSeries::new("entanglement_entropy", t_grid.to_vec(), values).with_param("cut", cut as f64))
}

/// Lowest eigenvector of `H(cfg)` and its entropy across `cut`.
pub fn ground_state_entropy(cfg: &ChainConfig, cut: usize) -> Result<(f64, f64), EntanglementError> {
    check_cut(cfg.n_sites, cut)?;
    let h = build_hamiltonian(cfg)?;
    let (e0, v) = lowest_eigenpair(h.matrix)?;
    let psi = StateVector::normalized(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(), cfg.n_sites)?;
    Ok((e0, entanglement_entropy(&psi, cut)?))
}
