pub mod combopt;
pub mod diffnet;
pub mod error;
pub mod evalkit;
pub mod points;
pub mod proposal;
pub mod quad;
pub mod riesz;
pub mod rng;
pub mod samplers;
pub mod sbm;
pub mod stable;
pub mod targets;

pub use error::{Error, Result};
pub use points::PointCloud;
pub use rng::RngStream;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
