//! Numerical realization of the extensions `L_A` of the inverse-square
//! operator `-d²/dr² + b/r²` with `b < -1/4`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod extensions;
pub mod ndim;
pub mod ode;
pub mod oracle;
pub mod radial;
pub mod resolvent;
pub mod semigroup;
pub mod solutions;
pub mod special_functions;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use num_complex::Complex64 as C64;
