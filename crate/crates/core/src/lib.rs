//! Parallel transport of tangent velocity fields along Wasserstein geodesics
//! between empirical measures, with closed-form Bures-Wasserstein transport
//! as an analytic oracle, a kernel Helmholtz-Hodge projection, and
//! counterfactual trajectory reconstruction under the resulting notion of
//! distributional parallel trends.

pub mod cloud;
pub mod counterfactual;
pub mod error;
pub mod gaussian;
pub mod helmholtz;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod ot;
pub mod rng;
pub mod transport;

pub use cloud::{PointCloud, TangentField, Trajectory};
pub use error::{Error, Result};
