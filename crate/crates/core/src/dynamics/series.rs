//! Short-time OTOC from the Taylor series of `[W(t), V]` in the Pauli-string
//! basis.
//!
//! Pauli strings commute or anticommute exactly, so the orders below
//! `2d + 1` have identically zero weight and the series keeps full relative
//! precision at times where the eigenbasis route is already at its rounding
//! floor.

use super::DynamicsError;
use crate::model::ChainConfig;
use num_complex::Complex64;

/// Largest chain handled; the dense coefficient vector has `4^N` slots.
pub const MAX_SERIES_SITES: usize = 10;

const MAX_ORDER: usize = 400;

/// Pauli string `⊗ σ(x_k, z_k)` with `σ(1,0) = X`, `σ(0,1) = Z`,
/// `σ(1,1) = Y`; bit `N − i` belongs to site `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pauli {
    x: u32,
    z: u32,
}

impl Pauli {
    fn anticommutes(self, other: Pauli) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    /// `self · other = i^e · σ(x1⊕x2, z1⊕z2)`; returns `e mod 4`.
    fn product_phase(self, other: Pauli) -> u32 {
        // σ(x, z) = i^{x·z} XˣZᶻ and ZX = −XZ
        let x3 = self.x ^ other.x;
        let z3 = self.z ^ other.z;
        let e = (self.x & self.z).count_ones() + (other.x & other.z).count_ones() + 2 * (self.z & other.x).count_ones()
            + 4 * 32
            - (x3 & z3).count_ones();
        e % 4
    }
}

fn i_pow(e: u32) -> Complex64 {
    match e % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn hamiltonian_terms(cfg: &ChainConfig) -> Vec<(Pauli, f64)> {
    let n = cfg.n_sites;
    let bit = |site: usize| 1u32 << (n - site);
    let mut terms = Vec::new();
    for i in 1..n {
        terms.push((Pauli { x: 0, z: bit(i) | bit(i + 1) }, -cfg.bond_coupling(i)));
    }
    for i in 1..=n {
        terms.push((Pauli { x: bit(i), z: 0 }, -cfg.hx));
        terms.push((Pauli { x: 0, z: bit(i) }, -cfg.hz));
    }
    terms.retain(|&(_, c)| c != 0.0);
    terms
}

/// Off-block coefficients of `ℒᵏ σz_j` for every order up to truncation.
#[derive(Clone, Debug)]
pub struct OtocExpansion {
    /// `orders[k]` holds `(string index, coefficient)` for strings that
    /// anticommute with `V`.
    orders: Vec<Vec<(usize, Complex64)>>,
    leading: Option<usize>,
    pub i: usize,
    pub j: usize,
    pub t_max: f64,
}

impl OtocExpansion {
    /// Expands `σz_j(t)` against `V = σz_i`, accurate for `|t| ≤ t_max`.
    pub fn new(cfg: &ChainConfig, i: usize, j: usize, t_max: f64) -> Result<Self, DynamicsError> {
        let n = cfg.n_sites;
        for site in [i, j] {
            if site == 0 || site > n {
                return Err(DynamicsError::SiteOutOfRange { site, n_sites: n });
            }
        }
        if n > MAX_SERIES_SITES {
            return Err(DynamicsError::InvalidParameter {
                name: "n_sites",
                value: n as f64,
            });
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(DynamicsError::InvalidParameter {
                name: "t_max",
                value: t_max,
            });
        }
        let terms = hamiltonian_terms(cfg);
        let key = |p: Pauli| ((p.x as usize) << n) | p.z as usize;
        let unkey = |k: usize| Pauli {
            x: (k >> n) as u32,
            z: (k & ((1 << n) - 1)) as u32,
        };
        let v = Pauli { x: 0, z: 1 << (n - i) };

        let mut current = vec![Complex64::new(0.0, 0.0); 1 << (2 * n)];
        current[key(Pauli { x: 0, z: 1 << (n - j) })] = Complex64::new(1.0, 0.0);
        let mut orders = Vec::new();
        let mut leading = None;
        let mut lead_size = 0.0;
        // ℒᵏW/k! · t_maxᵏ, tracked to decide truncation
        let mut scale = 1.0;
        for k in 0..=MAX_ORDER {
            let off: Vec<(usize, Complex64)> = current
                .iter()
                .enumerate()
                .filter(|(s, c)| (c.re != 0.0 || c.im != 0.0) && unkey(*s).anticommutes(v))
                .map(|(s, &c)| (s, c))
                .collect();
            let norm = off.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
            orders.push(off);
            let size = norm * scale;
            if leading.is_none() && norm > 0.0 {
                leading = Some(k);
                lead_size = size;
            }
            let total = current.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() * scale;
            if total == 0.0 {
                break;
            }
            if let Some(m) = leading {
                if k > m + 2 && total < 1e-18 * lead_size.min(1.0) {
                    break;
                }
            }
            if k == MAX_ORDER {
                return Err(DynamicsError::InvalidParameter {
                    name: "t_max",
                    value: t_max,
                });
            }
            let mut next = vec![Complex64::new(0.0, 0.0); current.len()];
            for (s, &c) in current.iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let p = unkey(s);
                for &(h, hc) in &terms {
                    if h.anticommutes(p) {
                        let r = Pauli {
                            x: h.x ^ p.x,
                            z: h.z ^ p.z,
                        };
                        next[key(r)] += c * i_pow(h.product_phase(p)) * (2.0 * hc);
                    }
                }
            }
            current = next;
            scale *= t_max / (k + 1) as f64;
        }
        Ok(Self {
            orders,
            leading,
            i,
            j,
            t_max,
        })
    }

    /// Lowest order with nonzero weight against `V`; `2d + 1` for `d ≥ 1`.
    pub fn leading_order(&self) -> Option<usize> {
        self.leading
    }

    pub fn truncation_order(&self) -> usize {
        self.orders.len() - 1
    }

    /// `C(t) = ‖[W(t), V]‖²_F / 2D = 2 Σ_s |c_s(t)|²` over anticommuting strings.
    pub fn value(&self, t: f64) -> f64 {
        let mut acc: std::collections::HashMap<usize, Complex64> = std::collections::HashMap::new();
        let mut factor = Complex64::new(1.0, 0.0);
        for (k, off) in self.orders.iter().enumerate() {
            if k > 0 {
                factor *= Complex64::new(0.0, t / k as f64);
            }
            for &(s, c) in off {
                *acc.entry(s).or_default() += factor * c;
            }
        }
        2.0 * acc.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// κ in `C = κ t^{2m}/m! + O(t^{2m+2})`, `m` the leading order.
    pub fn leading_kappa(&self) -> f64 {
        match self.leading {
            None => 0.0,
            Some(m) => {
                let w: f64 = self.orders[m].iter().map(|(_, c)| c.norm_sqr()).sum();
                let fact: f64 = (1..=m).map(|k| k as f64).product();
                2.0 * w / fact
            }
        }
    }
}
