//! Real-symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL.
//!
//! The reflectors are kept in the rows of the reduced matrix, so the same
//! reduction serves the full decomposition, the eigenvalue-only path, and
//! inverse iteration for a single eigenvector (the route used for ground
//! states at the largest chain lengths, where a dense eigenvector matrix is
//! not affordable).

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, RealMatrix};
use super::NumericsError;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with column `k` of `eigenvectors` the
/// normalized eigenvector of `eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: RealMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        let gram = v.transpose().matmul(v);
        gram.max_abs_diff(&RealMatrix::identity(gram.rows()))
    }

    /// `max_k max_i |(M v_k)_i - λ_k v_k,i|`.
    pub fn residual(&self, m: &RealMatrix) -> f64 {
        let mv = m.matmul(&self.eigenvectors);
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..m.rows() {
            for k in 0..n {
                let r = mv[(i, k)] - self.eigenvalues[k] * self.eigenvectors[(i, k)];
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Householder reduction `A = Q T Qᵀ` with `Q = P_{n-1} ⋯ P_1`.
struct Tridiagonal {
    diag: Vec<f64>,
    /// `offdiag[i]` couples `i-1` and `i`; `offdiag[0] = 0`.
    offdiag: Vec<f64>,
    /// Row `i` holds the reflector vector `u_i` in columns `0..i`.
    reflectors: RealMatrix,
    /// `H_i = |u_i|²/2`; zero means no reflection at step `i`.
    half_norms: Vec<f64>,
}

fn check_symmetric(m: &RealMatrix) -> Result<(), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let defect = m.hermiticity_defect();
    if defect > 1e-12 * scale {
        return Err(NumericsError::NonSymmetric { defect });
    }
    Ok(())
}

fn real_part_checked(m: &ComplexMatrix) -> Result<RealMatrix, NumericsError> {
    let imag = m.max_imag();
    if imag > 1e-12 {
        return Err(NumericsError::NonSymmetric { defect: imag });
    }
    Ok(m.real_part())
}

fn tridiagonalize(mut a: RealMatrix) -> Tridiagonal {
    let n = a.rows();
    let mut offdiag = vec![0.0; n];
    let mut half_norms = vec![0.0; n];
    let data = a.as_mut_slice();
    // rank-2 update `A -= u qᵀ + q uᵀ` of the previous step, applied lazily so
    // that each row is streamed once per step
    let mut pending: Option<(Vec<f64>, Vec<f64>)> = None;

    for i in (1..n).rev() {
        let l = i - 1;
        let row_i = i * n;
        if let Some((u, q)) = &pending {
            rank2_row(&mut data[row_i..=row_i + i], u, q, i);
        }

        let mut reflector = None;
        if l == 0 {
            offdiag[i] = data[row_i];
        } else {
            let scale: f64 = data[row_i..=row_i + l].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                offdiag[i] = data[row_i + l];
            } else {
                let mut h = 0.0;
                for x in &mut data[row_i..=row_i + l] {
                    *x /= scale;
                    h += *x * *x;
                }
                let f = data[row_i + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                offdiag[i] = scale * g;
                h -= f * g;
                data[row_i + l] = f - g;
                half_norms[i] = h;
                reflector = Some((data[row_i..row_i + i].to_vec(), h));
            }
        }

        // one pass over the leading block: finish the old update, then
        // accumulate p = A u from the lower triangle
        let mut p = vec![0.0; if reflector.is_some() { i } else { 0 }];
        for j in 0..i {
            let row = &mut data[j * n..=j * n + j];
            if let Some((u, q)) = &pending {
                rank2_row(row, u, q, j);
            }
            if let Some((u, _)) = &reflector {
                let s = dot_axpy(&row[..j], &u[..j], u[j], &mut p[..j]);
                p[j] += s + row[j] * u[j];
            }
        }

        pending = reflector.map(|(u, h)| {
            let mut f_acc = 0.0;
            for (pj, &uj) in p.iter_mut().zip(&u) {
                *pj /= h;
                f_acc += *pj * uj;
            }
            let hh = f_acc / (h + h);
            for (pj, &uj) in p.iter_mut().zip(&u) {
                *pj -= hh * uj;
            }
            (u, p)
        });
    }

    let diag = (0..n).map(|i| data[i * n + i]).collect();
    Tridiagonal {
        diag,
        offdiag,
        reflectors: a,
        half_norms,
    }
}

/// Returns `a·x` while adding `alpha·a` into `y`. Split into independent lanes
/// so the reduction vectorizes.
#[inline]
fn dot_axpy(a: &[f64], x: &[f64], alpha: f64, y: &mut [f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let split = a.len() - a.len() % LANES;
    for ((ac, xc), yc) in a[..split]
        .chunks_exact(LANES)
        .zip(x[..split].chunks_exact(LANES))
        .zip(y[..split].chunks_exact_mut(LANES))
    {
        for l in 0..LANES {
            acc[l] += ac[l] * xc[l];
            yc[l] += ac[l] * alpha;
        }
    }
    let mut s: f64 = acc.iter().sum();
    for k in split..a.len() {
        s += a[k] * x[k];
        y[k] += a[k] * alpha;
    }
    s
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let split = a.len() - a.len() % LANES;
    for (ac, bc) in a[..split].chunks_exact(LANES).zip(b[..split].chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += ac[l] * bc[l];
        }
    }
    let mut s: f64 = acc.iter().sum();
    for k in split..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `row[k] -= u[j] q[k] + q[j] u[k]` for `k <= j`.
#[inline]
fn rank2_row(row: &mut [f64], u: &[f64], q: &[f64], j: usize) {
    let (uj, qj) = (u[j], q[j]);
    for ((ajk, &uk), &qk) in row[..=j].iter_mut().zip(&u[..=j]).zip(&q[..=j]) {
        *ajk -= uj * qk + qj * uk;
    }
}

impl Tridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Applies `Q` to `v` in place.
    fn apply_q(&self, v: &mut [f64]) {
        let n = self.dim();
        for i in 1..n {
            let h = self.half_norms[i];
            if h == 0.0 {
                continue;
            }
            let u = &self.reflectors.row(i)[..i];
            let s = dot(u, &v[..i]) / h;
            for (x, &uk) in v[..i].iter_mut().zip(u) {
                *x -= s * uk;
            }
        }
    }
}

/// Implicit QL on a symmetric tridiagonal matrix. On return `diag` holds the
/// (unsorted) eigenvalues. When `vectors` is given, row `k` of it is rotated
/// along with eigenvalue `k`.
fn tridiagonal_ql(
    diag: &mut [f64],
    offdiag: &[f64],
    mut vectors: Option<&mut RealMatrix>,
) -> Result<(), NumericsError> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&offdiag[1..]);
    let mut rotations: Vec<(f64, f64)> = Vec::new();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(NumericsError::NoConvergence { index: l });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            rotations.clear();
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                rotations.push((c, s));
            }
            if let Some(z) = vectors.as_deref_mut() {
                // rotation k acts on rows (m-1-k, m-k)
                let cols = z.cols();
                let data = z.as_mut_slice();
                for (k, &(c, s)) in rotations.iter().enumerate() {
                    let lo = m - 1 - k;
                    let (head, tail) = data.split_at_mut((lo + 1) * cols);
                    let row_lo = &mut head[lo * cols..];
                    let row_hi = &mut tail[..cols];
                    for (a, b) in row_lo.iter_mut().zip(row_hi.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full eigendecomposition of a real-symmetric matrix held in complex storage.
pub fn eigh_symmetric(m: &ComplexMatrix) -> Result<Spectrum, NumericsError> {
    eigh_real(&real_part_checked(m)?)
}

/// Full eigendecomposition of a real-symmetric matrix.
pub fn eigh_real(m: &RealMatrix) -> Result<Spectrum, NumericsError> {
    check_symmetric(m)?;
    let n = m.rows();
    let tri = tridiagonalize(m.clone());
    let mut diag = tri.diag.clone();
    // row k of `z` is eigenvector k of T, later of A
    let mut z = RealMatrix::identity(n);
    tridiagonal_ql(&mut diag, &tri.offdiag, Some(&mut z))?;
    for k in 0..n {
        tri.apply_q(z.row_mut(k));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let eigenvectors = RealMatrix::from_fn(n, n, |i, j| z[(order[j], i)]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only. Consumes the matrix to avoid a copy at large
/// dimension.
pub fn eigvalsh_real(m: RealMatrix) -> Result<Vec<f64>, NumericsError> {
    check_symmetric(&m)?;
    let tri = tridiagonalize(m);
    let mut diag = tri.diag;
    tridiagonal_ql(&mut diag, &tri.offdiag, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// Eigenvalues plus the eigenvectors for the requested (ascending) indices,
/// the latter from inverse iteration on the tridiagonal form.
pub fn eigh_selected(
    m: RealMatrix,
    indices: &[usize],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), NumericsError> {
    check_symmetric(&m)?;
    let n = m.rows();
    if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
        return Err(NumericsError::IndexOutOfRange { index: bad, dim: n });
    }
    let tri = tridiagonalize(m);
    let mut values = tri.diag.clone();
    tridiagonal_ql(&mut values, &tri.offdiag, None)?;
    values.sort_by(f64::total_cmp);
    let scale = values
        .iter()
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let vectors = indices
        .iter()
        .map(|&k| {
            let mut v = tridiagonal_inverse_iteration(&tri.diag, &tri.offdiag, values[k], scale);
            tri.apply_q(&mut v);
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Lowest eigenvalue and its eigenvector.
pub fn lowest_eigenpair(m: RealMatrix) -> Result<(f64, Vec<f64>), NumericsError> {
    let (values, mut vectors) = eigh_selected(m, &[0])?;
    Ok((values[0], vectors.remove(0)))
}

/// Inverse iteration `(T - σ) x = b` with Gaussian elimination and partial
/// pivoting on the tridiagonal band.
fn tridiagonal_inverse_iteration(diag: &[f64], offdiag: &[f64], lambda: f64, scale: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let shift = lambda - 1e3 * f64::EPSILON * scale;
    // banded LU: row i stores (d0, d1, d2) = entries at columns i, i+1, i+2
    let mut u0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut mult = vec![0.0; n];
    let mut swapped = vec![false; n];
    let mut cur0 = diag[0] - shift;
    let mut cur1 = offdiag[1];
    for i in 0..n - 1 {
        let sub = offdiag[i + 1];
        let next0 = diag[i + 1] - shift;
        let next1 = if i + 2 < n { offdiag[i + 2] } else { 0.0 };
        if cur0.abs() >= sub.abs() {
            let m = if cur0 == 0.0 { 0.0 } else { sub / cur0 };
            u0[i] = cur0;
            u1[i] = cur1;
            u2[i] = 0.0;
            mult[i] = m;
            cur0 = next0 - m * cur1;
            cur1 = next1;
        } else {
            let m = cur0 / sub;
            u0[i] = sub;
            u1[i] = next0;
            u2[i] = next1;
            mult[i] = m;
            swapped[i] = true;
            cur0 = cur1 - m * next0;
            cur1 = -m * next1;
        }
    }
    u0[n - 1] = cur0;
    let tiny = f64::EPSILON * scale;
    for x in u0.iter_mut() {
        if x.abs() < tiny {
            *x = tiny.copysign(if *x == 0.0 { 1.0 } else { *x });
        }
    }

    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7919 % 101) as f64 / 101.0)).collect();
    for _ in 0..4 {
        // forward elimination on the right-hand side
        for i in 0..n - 1 {
            if swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= mult[i] * x[i];
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    // fix the sign so the largest component is positive
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    if x[imax] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    x
}

/// Complex view of eigenvector `k`.
pub fn eigenvector_complex(spec: &Spectrum, k: usize) -> Vec<Complex64> {
    spec.eigenvector(k).into_iter().map(Complex64::from).collect()
}
