//! Seeded randomness.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;

/// The generator behind every stochastic routine.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random element of U(2).
///
/// A Gaussian 4-vector normalized onto the 3-sphere is Haar on SU(2); a
/// uniform global phase extends it to U(2).
pub fn haar_qubit_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(g[0], g[1]) / norm;
    let b = Complex64::new(g[2], g[3]) / norm;
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    ComplexMatrix::from_vec(2, 2, vec![a * phase, -b.conj() * phase, b * phase, a.conj() * phase])
}
