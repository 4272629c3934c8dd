//! Exact discrepancy of linear flows on the torus `R^d / Z^d` against convex
//! polytopes, together with the Fourier and Diophantine machinery used to
//! certify that the discrepancy stays bounded.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`diophantine`]: continued fractions, `‖nα‖` scans, the series
//!   `Σ 1/(n²‖nα‖)` with a certified tail, and dyadic spacing audits.
//! * [`geometry`]: directions, polytopes, segment clipping and the Poincaré
//!   section function `f`, with its exact piecewise-linear form for `d = 2, 3`.
//! * [`engine`]: continuous discrepancy `Δ_T` (exact and by quadrature),
//!   the discrete Kronecker discrepancy `D_N`, box suprema and traces.
//! * [`fourier`]: exact Fourier coefficients of `f`, the explicit planar bound,
//!   the Fourier majorant and the flag envelope.

pub mod algebraic;
pub mod dd;
pub mod diophantine;
pub mod engine;
pub mod error;
pub mod fourier;
pub mod geometry;
pub(crate) mod linalg;

pub use algebraic::Real;
pub use dd::Dd;
pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
