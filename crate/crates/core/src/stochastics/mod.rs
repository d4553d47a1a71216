//! Random streams, univariate laws and the special functions under them.

pub mod distribution;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use distribution::{Family, FinitePmf, MarginalDistribution, Sampler};
pub use quadrature::GaussLegendre;
pub use rng::{RngStream, StreamRng};
pub use special::{norm_cdf, norm_quantile, student_t_quantile};
