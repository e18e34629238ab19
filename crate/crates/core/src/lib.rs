pub mod chebyshev;
pub mod error;
pub mod fredholm;
pub mod kernels;
pub mod painleve;
pub mod quadrature;
pub mod ratelab;
pub mod sampler;
pub mod specfun;
pub mod unitary;

pub use error::{Error, Result};
pub use fredholm::{cdf_largest, gap_nystrom, gap_series, GapResult};
pub use kernels::{EnsembleConfig, KernelHandle, KernelKind, PQPair, SParam};
pub use quadrature::MapKind;
pub use specfun::{ComplexVal, SeriesResult};
