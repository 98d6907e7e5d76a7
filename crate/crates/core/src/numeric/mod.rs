//! Scalar numerical kernels shared by the rest of the crate.

mod normal;
mod quadrature;
mod rate;
mod roots;

pub use normal::{ln_std_normal_tail, mills_ratio, std_normal_cdf, std_normal_pdf};
pub use quadrature::{integrate, Quadrature, QuadratureSettings};
pub use rate::{log_log_ols, RateFit, RatePoint};
pub use roots::{bisect, Bisection};
