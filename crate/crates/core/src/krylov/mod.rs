//! Operator-space Krylov machinery: Hilbert–Schmidt geometry, Arnoldi with
//! full reorthogonalization, and the measures built on the resulting basis.

use crate::dynamics::{apply_phases, from_eigenbasis, to_eigenbasis};
use crate::model::HamiltonianMatrix;
use crate::numerics::{eigh_real, ComplexMatrix, NumericsError, Spectrum};
use num_complex::Complex64;
use rayon::prelude::*;
use std::path::Path;
use thiserror::Error;

pub mod measures;
pub mod store;

pub use measures::*;
pub use store::BasisStore;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum KrylovError {
    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("seed operator has zero norm")]
    ZeroOperator,
    #[error("sequence of {got} coefficients is too short (need more than {needed})")]
    SequenceTooShort { needed: usize, got: usize },
    #[error("amplitudes are not normalized (sum of squares {total})")]
    NotNormalized { total: f64 },
    #[error("{name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("scratch file: {0}")]
    Io(#[from] std::io::Error),
}

/// Operator viewed as a vector under `⟨A|B⟩ = tr(A†B)/D`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsVector {
    matrix: ComplexMatrix,
    norm: f64,
}

impl HsVector {
    pub fn new(matrix: ComplexMatrix) -> Self {
        let norm = hs_norm_of(matrix.as_slice(), matrix.rows());
        Self { matrix, norm }
    }

    /// Scaled to unit HS norm.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self, KrylovError> {
        let v = Self::new(matrix);
        if v.norm == 0.0 {
            return Err(KrylovError::ZeroOperator);
        }
        let s = 1.0 / v.norm;
        Ok(Self::new(v.matrix.scaled(Complex64::new(s, 0.0))))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

fn hs_norm_of(v: &[Complex64], dim: usize) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / dim as f64).sqrt()
}

/// `Σ conj(a)·b / D` on raw entry slices.
fn dot(a: &[Complex64], b: &[Complex64], dim: usize) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im) / dim as f64
}

pub fn hs_inner(a: &HsVector, b: &HsVector) -> Result<Complex64, KrylovError> {
    if a.dim() != b.dim() {
        return Err(KrylovError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(dot(a.matrix.as_slice(), b.matrix.as_slice(), a.dim()))
}

/// `[H, O]`.
pub fn liouvillian(h: &HamiltonianMatrix, o: &HsVector) -> Result<HsVector, KrylovError> {
    if h.dim() != o.dim() {
        return Err(KrylovError::DimensionMismatch {
            expected: h.dim(),
            got: o.dim(),
        });
    }
    Ok(HsVector::new(commutator_real(&h.matrix, &o.matrix)))
}

/// `HO − OH` for real `H`, without promoting `H` to complex.
fn commutator_real(h: &crate::numerics::RealMatrix, o: &ComplexMatrix) -> ComplexMatrix {
    let d = o.rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let hrow = h.row(i);
        let orow_i = o.row(i);
        let out_row = out.row_mut(i);
        // (HO)_ij = Σ_k H_ik O_kj
        for (k, &hik) in hrow.iter().enumerate() {
            if hik == 0.0 {
                continue;
            }
            for (dst, &okj) in out_row.iter_mut().zip(o.row(k)) {
                *dst += okj * hik;
            }
        }
        // (OH)_ij = Σ_k O_ik H_kj
        for (k, &oik) in orow_i.iter().enumerate() {
            if oik.re == 0.0 && oik.im == 0.0 {
                continue;
            }
            for (dst, &hkj) in out_row.iter_mut().zip(h.row(k)) {
                *dst -= oik * hkj;
            }
        }
    }
    out
}

/// Coordinates in which basis vectors are stored and `ℒ` is applied.
#[derive(Clone, Debug)]
pub enum Frame {
    /// The computational basis; `ℒ(X) = HX − XH` as dense products.
    Computational,
    /// The energy eigenbasis, where `ℒ` multiplies entry `(α, β)` by
    /// `E_α − E_β`. Boxed because a spectrum carries a `D×D` matrix.
    Energy(Box<Spectrum>),
}

/// Which frame [`arnoldi`] works in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FrameChoice {
    #[default]
    Energy,
    Computational,
}

/// Krylov basis `{𝒲_n}` with Arnoldi coefficients; `b[0] = ‖O‖`.
#[derive(Debug)]
pub struct KrylovDecomposition {
    pub basis: BasisStore,
    pub b: Vec<f64>,
    /// Hilbert-space dimension `D`.
    pub dim: usize,
    /// Whether iteration stopped on a small `b_n` rather than `max_k`.
    pub exhausted: bool,
    pub frame: Frame,
}

impl KrylovDecomposition {
    /// Number of basis vectors `K`.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `D² − D + 1`, the largest possible `K`.
    pub fn bound(&self) -> usize {
        self.dim * self.dim - self.dim + 1
    }

    /// `𝒲_n` in the computational basis.
    pub fn vector(&self, n: usize) -> Result<HsVector, KrylovError> {
        let m = ComplexMatrix::from_vec(self.dim, self.dim, self.basis.get(n)?);
        Ok(HsVector::new(match &self.frame {
            Frame::Computational => m,
            Frame::Energy(spec) => from_eigenbasis(&m, spec),
        }))
    }

    /// Entries of a computational-basis operator in this decomposition's frame.
    pub fn to_frame(&self, o: &HsVector) -> Result<Vec<Complex64>, KrylovError> {
        if o.dim() != self.dim {
            return Err(KrylovError::DimensionMismatch {
                expected: self.dim,
                got: o.dim(),
            });
        }
        Ok(match &self.frame {
            Frame::Computational => o.matrix.as_slice().to_vec(),
            Frame::Energy(spec) => to_eigenbasis(&o.matrix, spec).into_vec(),
        })
    }

    /// `max |⟨𝒲_i|𝒲_j⟩ − δ_ij|` over all pairs.
    pub fn orthonormality_defect(&self) -> Result<f64, KrylovError> {
        let k = self.len();
        let d = self.dim;
        let mut worst = 0.0f64;
        let all = self.load_all()?;
        for i in 0..k {
            let row: Vec<f64> = (i..k)
                .into_par_iter()
                .map(|j| {
                    let g = dot(&all[i], &all[j], d);
                    let target = if i == j { 1.0 } else { 0.0 };
                    (g - target).norm()
                })
                .collect();
            worst = row.into_iter().fold(worst, f64::max);
        }
        Ok(worst)
    }

    /// `|⟨𝒲_m|ℒ(𝒲_n)⟩|` for the given `(m, n)` pairs, with `ℒ` applied as
    /// `HX − XH` in the computational basis whatever the storage frame.
    pub fn liouvillian_elements(&self, h: &HamiltonianMatrix, pairs: &[(usize, usize)]) -> Result<Vec<f64>, KrylovError> {
        pairs
            .iter()
            .map(|&(m, n)| {
                let lw = liouvillian(h, &self.vector(n)?)?;
                Ok(hs_inner(&self.vector(m)?, &lw)?.norm())
            })
            .collect()
    }

    fn load_all(&self) -> Result<Vec<Vec<Complex64>>, KrylovError> {
        let mut all = Vec::with_capacity(self.len());
        self.basis.for_each(|_, v| all.push(v.to_vec()))?;
        Ok(all)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArnoldiOptions {
    /// Stop when `b_n ≤ tol · b_0`.
    pub tol: f64,
    pub max_k: usize,
    pub frame: FrameChoice,
}

impl ArnoldiOptions {
    pub fn full(dim: usize) -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_k: dim * dim - dim + 1,
            frame: FrameChoice::Energy,
        }
    }

    /// Caps `K` at `D²` only, so termination is decided by `tol` alone. In
    /// floating point the span can need a vector or two past `D² − D + 1`
    /// before `O(t)` is captured to rounding level.
    pub fn exhaustive(dim: usize) -> Self {
        Self {
            max_k: dim * dim,
            ..Self::full(dim)
        }
    }
}

/// Arnoldi on `ℒ = [H, ·]` from seed `o`, with two classical Gram–Schmidt
/// passes against the whole basis at every step, kept in memory.
pub fn arnoldi(h: &HamiltonianMatrix, o: &HsVector, opts: ArnoldiOptions) -> Result<KrylovDecomposition, KrylovError> {
    arnoldi_into(h, o, opts, BasisStore::in_memory(o.dim()))
}

/// As [`arnoldi`], streaming the basis through a scratch file.
pub fn arnoldi_out_of_core(
    h: &HamiltonianMatrix,
    o: &HsVector,
    opts: ArnoldiOptions,
    scratch: impl AsRef<Path>,
) -> Result<KrylovDecomposition, KrylovError> {
    let store = BasisStore::scratch_file(scratch, o.dim())?;
    arnoldi_into(h, o, opts, store)
}

pub fn arnoldi_into(
    h: &HamiltonianMatrix,
    o: &HsVector,
    opts: ArnoldiOptions,
    mut basis: BasisStore,
) -> Result<KrylovDecomposition, KrylovError> {
    let d = o.dim();
    if h.dim() != d || basis.dim() != d {
        return Err(KrylovError::DimensionMismatch {
            expected: h.dim(),
            got: d,
        });
    }
    if o.norm() == 0.0 {
        return Err(KrylovError::ZeroOperator);
    }
    if !(opts.tol >= 0.0) {
        return Err(KrylovError::InvalidParameter {
            name: "tol",
            value: opts.tol,
        });
    }
    let frame = match opts.frame {
        FrameChoice::Computational => Frame::Computational,
        FrameChoice::Energy => Frame::Energy(Box::new(eigh_real(&h.matrix)?)),
    };
    // ω_αβ = E_α − E_β, used only in the energy frame
    let omega: Vec<f64> = match &frame {
        Frame::Energy(spec) => {
            let e = &spec.eigenvalues;
            (0..d * d).map(|p| e[p / d] - e[p % d]).collect()
        }
        Frame::Computational => Vec::new(),
    };
    let apply = |x: Vec<Complex64>| -> Vec<Complex64> {
        match &frame {
            Frame::Computational => commutator_real(&h.matrix, &ComplexMatrix::from_vec(d, d, x)).into_vec(),
            Frame::Energy(_) => x.iter().zip(&omega).map(|(z, w)| z * w).collect(),
        }
    };

    let b0 = o.norm();
    let mut b = vec![b0];
    let seed = match &frame {
        Frame::Computational => o.matrix.as_slice().to_vec(),
        Frame::Energy(spec) => to_eigenbasis(&o.matrix, spec).into_vec(),
    };
    let mut last: Vec<Complex64> = seed.iter().map(|z| z / b0).collect();
    basis.push(&last)?;
    let mut exhausted = false;

    while basis.len() < opts.max_k.max(1) {
        let mut a = apply(last);
        for _ in 0..2 {
            orthogonalize(&basis, &mut a, d)?;
        }
        let bn = hs_norm_of(&a, d);
        if bn <= opts.tol * b0 {
            exhausted = true;
            break;
        }
        let s = 1.0 / bn;
        a.iter_mut().for_each(|z| *z *= s);
        basis.push(&a)?;
        b.push(bn);
        last = a;
    }
    Ok(KrylovDecomposition {
        basis,
        b,
        dim: d,
        exhausted,
        frame,
    })
}

/// One classical Gram–Schmidt sweep: `a −= Σ ⟨𝒲_m|a⟩ 𝒲_m`.
fn orthogonalize(basis: &BasisStore, a: &mut [Complex64], d: usize) -> Result<(), KrylovError> {
    match basis {
        BasisStore::Memory { vectors, .. } => {
            let coeffs: Vec<Complex64> = vectors.par_iter().map(|w| dot(w, a, d)).collect();
            for (w, c) in vectors.iter().zip(coeffs) {
                for (x, y) in a.iter_mut().zip(w) {
                    *x -= c * y;
                }
            }
        }
        BasisStore::File(_) => {
            let mut coeffs = Vec::with_capacity(basis.len());
            basis.for_each(|_, w| coeffs.push(dot(w, a, d)))?;
            basis.for_each(|k, w| {
                let c = coeffs[k];
                for (x, y) in a.iter_mut().zip(w) {
                    *x -= c * y;
                }
            })?;
        }
    }
    Ok(())
}

/// `O(t) = e^{iHt} O e^{−iHt}`.
pub fn evolve(o: &HsVector, spec: &Spectrum, t: f64) -> Result<HsVector, KrylovError> {
    if o.dim() != spec.dim() {
        return Err(KrylovError::DimensionMismatch {
            expected: spec.dim(),
            got: o.dim(),
        });
    }
    let mut m = to_eigenbasis(&o.matrix, spec);
    apply_phases(&mut m, &spec.eigenvalues, t);
    Ok(HsVector::new(from_eigenbasis(&m, spec)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Amplitudes {
    /// `φ_n = ⟨𝒲_n|O(t)⟩`.
    pub phis: Vec<Complex64>,
    /// `‖O(t)‖² − Σ|φ_n|²`.
    pub completeness_defect: f64,
}

pub fn krylov_amplitudes(o_t: &HsVector, dec: &KrylovDecomposition) -> Result<Amplitudes, KrylovError> {
    Ok(krylov_amplitudes_many(std::slice::from_ref(o_t), dec)?.remove(0))
}

/// Projects several operators in one pass over the basis.
pub fn krylov_amplitudes_many(ops: &[HsVector], dec: &KrylovDecomposition) -> Result<Vec<Amplitudes>, KrylovError> {
    let framed = ops.iter().map(|o| dec.to_frame(o)).collect::<Result<Vec<_>, _>>()?;
    let norms: Vec<f64> = ops.iter().map(|o| o.norm() * o.norm()).collect();
    project(&framed, &norms, dec)
}

fn project(framed: &[Vec<Complex64>], norms: &[f64], dec: &KrylovDecomposition) -> Result<Vec<Amplitudes>, KrylovError> {
    let d = dec.dim;
    let mut phis = vec![Vec::with_capacity(dec.len()); framed.len()];
    dec.basis.for_each(|_, w| {
        let row: Vec<Complex64> = framed.par_iter().map(|o| dot(w, o, d)).collect();
        for (p, z) in phis.iter_mut().zip(row) {
            p.push(z);
        }
    })?;
    Ok(phis
        .into_iter()
        .zip(norms)
        .map(|(phis, &n2)| {
            let total: f64 = phis.iter().map(|z| z.norm_sqr()).sum();
            Amplitudes {
                phis,
                completeness_defect: n2 - total,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityCurve {
    pub times: Vec<f64>,
    pub kc: Vec<f64>,
    /// Largest `|1 − Σ|φ_n|²|` seen on the grid.
    pub max_completeness_defect: f64,
    /// `φ_n` at the last grid time.
    pub final_amplitudes: Vec<Complex64>,
}

/// `𝒦_C(t)` on a grid; `o` must be HS-normalized.
pub fn complexity_curve(
    o: &HsVector,
    spec: &Spectrum,
    dec: &KrylovDecomposition,
    times: &[f64],
) -> Result<ComplexityCurve, KrylovError> {
    if o.dim() != spec.dim() {
        return Err(KrylovError::DimensionMismatch {
            expected: spec.dim(),
            got: o.dim(),
        });
    }
    let base = to_eigenbasis(&o.matrix, spec);
    let framed: Vec<Vec<Complex64>> = times
        .par_iter()
        .map(|&t| {
            let mut m = base.clone();
            apply_phases(&mut m, &spec.eigenvalues, t);
            match &dec.frame {
                Frame::Energy(own) if same_basis(own, spec) => m.into_vec(),
                Frame::Energy(own) => to_eigenbasis(&from_eigenbasis(&m, spec), own).into_vec(),
                Frame::Computational => from_eigenbasis(&m, spec).into_vec(),
            }
        })
        .collect();
    let n2 = o.norm() * o.norm();
    let amps = project(&framed, &vec![n2; times.len()], dec)?;
    let mut kc = Vec::with_capacity(times.len());
    let mut worst = 0.0f64;
    for a in &amps {
        worst = worst.max(a.completeness_defect.abs());
        kc.push(krylov_complexity(&a.phis)?);
    }
    Ok(ComplexityCurve {
        times: times.to_vec(),
        kc,
        max_completeness_defect: worst,
        final_amplitudes: amps.last().map(|a| a.phis.clone()).unwrap_or_default(),
    })
}

pub(crate) fn same_basis(a: &Spectrum, b: &Spectrum) -> bool {
    a.eigenvalues == b.eigenvalues && a.eigenvectors.as_slice() == b.eigenvectors.as_slice()
}
