//! Least-squares polynomial fits.

use super::NumericsError;

/// Polynomial coefficients (lowest degree first) and the RMS misfit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

impl FitResult {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Slope of a degree-1 fit.
    pub fn slope(&self) -> f64 {
        self.coefficients.get(1).copied().unwrap_or(0.0)
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }
}

/// Condition estimate of the normal system above which a fit is refused.
pub const MAX_NORMAL_CONDITION: f64 = 1e12;

/// Least-squares polynomial of the given degree through `(xs, ys)`.
///
/// Solved by Householder QR of the Vandermonde matrix; the normal-equation
/// condition number is estimated as `(max|r_ii| / min|r_ii|)²` and fits
/// beyond [`MAX_NORMAL_CONDITION`] are rejected.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<FitResult, NumericsError> {
    if xs.len() != ys.len() {
        return Err(NumericsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let m = xs.len();
    let p = degree + 1;
    if m < p {
        return Err(NumericsError::TooFewPoints { needed: p, got: m });
    }
    let x0 = xs[0];
    if degree > 0 && xs.iter().all(|&x| x == x0) {
        return Err(NumericsError::IllConditioned {
            condition: f64::INFINITY,
        });
    }

    // column-major Vandermonde so each reflector walks contiguous memory
    let mut a = vec![0.0; m * p];
    for (i, &x) in xs.iter().enumerate() {
        let mut pow = 1.0;
        for j in 0..p {
            a[j * m + i] = pow;
            pow *= x;
        }
    }
    let mut b = ys.to_vec();
    let mut rdiag = vec![0.0; p];

    for k in 0..p {
        let col = &mut a[k * m..(k + 1) * m];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(NumericsError::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        col[k] -= alpha;
        let vnorm_sq: f64 = col[k..].iter().map(|v| v * v).sum();
        rdiag[k] = alpha;
        let v: Vec<f64> = col[k..].to_vec();
        for j in k + 1..p {
            let cj = &mut a[j * m + k..(j + 1) * m];
            let s: f64 = v.iter().zip(cj.iter()).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm_sq;
            for (c, &vi) in cj.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let s: f64 = v.iter().zip(&b[k..]).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm_sq;
        for (c, &vi) in b[k..].iter_mut().zip(&v) {
            *c -= s * vi;
        }
    }

    let rmax = rdiag.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let rmin = rdiag.iter().fold(f64::INFINITY, |a, r| a.min(r.abs()));
    let condition = (rmax / rmin).powi(2);
    if !condition.is_finite() || condition > MAX_NORMAL_CONDITION {
        return Err(NumericsError::IllConditioned { condition });
    }

    let mut coefficients = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[j * m + k] * coefficients[j];
        }
        coefficients[k] = s / rdiag[k];
    }
    let mut fit = FitResult {
        coefficients,
        residual: 0.0,
    };
    let sq: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (fit.eval(x) - y).powi(2))
        .sum();
    fit.residual = (sq / m as f64).sqrt();
    Ok(fit)
}

/// Degree-1 fit of `log10(ys)` against `log10(xs)`; the slope is the
/// power-law exponent.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<FitResult, NumericsError> {
    if xs.len() != ys.len() {
        return Err(NumericsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|&&v| !(v > 0.0)) {
        return Err(NumericsError::NonPositiveInput { value: bad });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    polyfit(&lx, &ly, 1)
}
