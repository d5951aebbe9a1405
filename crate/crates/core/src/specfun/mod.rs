//! Special functions: Gamma, Bessel `J_ν`/`K_σ`, classical orthogonal
//! polynomials and their eigenfunction systems, and Gauss quadrature.

mod bessel;
mod gamma;
pub mod orthopoly;
pub mod quadrature;

pub use bessel::{bessel_j, bessel_k, bessel_k_scaled, J_MAX_ARG, J_MAX_ORDER};
pub(crate) use bessel::{bessel_j_unchecked, bessel_k_scaled_unchecked};
pub use gamma::{gamma, ln_gamma, sin_pi};
pub(crate) use gamma::{gamma_unchecked, ln_gamma_unchecked};
pub use orthopoly::{eval_basis, Basis, Normalization, PolyFamily, PolyKind};
