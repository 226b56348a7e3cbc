//! Self-contained numerical kernel.
//!
//! Everything here is pure and allocation-free except the adaptive quadrature
//! behind [`owens_q`], which keeps a small list of subintervals.

mod gamma;
mod normal;
mod owens;
mod quadrature;
mod student;

pub use gamma::{ln_beta, ln_gamma, regularized_incomplete_beta};
pub use normal::{
    erf, erfc, inverse_erf, lognormal_quantile, normal_interval_prob, std_normal_cdf,
    std_normal_pdf, std_normal_quantile,
};
pub use owens::owens_q;
pub use quadrature::{integrate, QuadratureSpec};
pub use student::{student_t_cdf, student_t_pdf, student_t_quantile, student_t_sf};

#[cfg(test)]
pub(crate) use normal::phi;
