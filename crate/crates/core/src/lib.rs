//! Quadrature noise of squeezed light transmitted through a random
//! amplifying medium, with and without wavefront shaping.
//!
//! - [`medium`]: transport parameters, input state, coefficient types.
//! - [`analytic`]: closed-form ensemble-averaged coefficients and variances.
//! - [`ensemble`]: Monte Carlo disorder averaging used as an independent oracle.
//! - [`snl`]: sub-shot-noise condition, closed-form threshold, region scans.

pub mod analytic;
pub mod ensemble;
pub mod error;
pub mod medium;
pub mod snl;

pub use analytic::{full_report, mean_coefficients, mean_coefficients_linear, Quantity, Shaping, VarianceReport};
pub use ensemble::{mc_average, mc_average_all, McEstimate, SamplerConfig, SamplerMode};
pub use error::{Error, Result};
pub use medium::{units_to_spec, validate_medium, EnsembleCoefficients, InputState, MediumSpec, PhysicalUnits};
pub use num_complex::Complex64;
