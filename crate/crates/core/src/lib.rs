//! Constructive networks for additive fine-tuning.
//!
//! Given samples `x_1..x_K` and residual targets on a tuned subset `T`
//! (zero elsewhere), the builders produce small ReLU-family networks that hit
//! every target exactly, piece counting certifies how many neurons any such
//! network needs, and the experiment harness measures the same question by
//! gradient descent.

pub mod builders2;
pub mod builders3;
pub mod capacity_bounds;
pub mod deep;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod linalg;
pub mod network;
pub mod partition;
pub mod pwl;
pub mod scalar;

pub use error::{FtcError, Result};
pub use num_rational::BigRational;
pub use pwl::{piece_budget, Activation, Pwl1D};
pub use scalar::Scalar;
