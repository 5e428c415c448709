//! Approximate near-neighbor retrieval for polygons under turning-function
//! distances, built on locality-sensitive hashing.

pub mod exact;
pub mod families;
pub mod generate;
pub mod index;
pub mod polyindex;
pub mod stepfn;
pub mod turning;

pub use exact::{AlignedDistance, Norm};
pub use stepfn::{StepError, StepFunction};
pub use turning::{Polygon, PolygonError};
