//! Numerical diagnostics of ergodicity breaking in the transverse-field Ising
//! chain with two coupling halves: exact diagonalization, level statistics,
//! spectral form factor, OTOCs, operator-space Krylov complexity, and
//! bipartite entanglement.

pub mod numerics;
pub mod model;
pub mod spectral;
pub mod dynamics;
pub mod krylov;
pub mod entanglement;
