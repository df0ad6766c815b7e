//! Numeric foundation shared by every other module.

pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tensor;

pub use quadrature::{integrate, QuadratureRule, Weight};
pub use rng::{sample_standard_normal, RngStream};
pub use special::{gaussian_cdf, gaussian_pdf};
pub use stats::{monte_carlo, monte_carlo_vec, MeanEstimate};
pub use tensor::Tensor;
