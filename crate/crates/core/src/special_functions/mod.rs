//! Complex gamma and modified Bessel functions of imaginary (and, for the
//! Friedrichs blocks, real) order.

mod alpha;
pub(crate) mod bessel;
mod gamma;

pub use alpha::{alpha_coefficient, AlphaCoefficient, CouplingNu};
pub use bessel::{bessel_i_imag_order, bessel_k_imag_order, i_real_scaled, k_real_scaled, OrderSign, ValueDeriv};
pub use gamma::{complex_gamma, ln_gamma};
