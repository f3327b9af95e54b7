//! Print preparation on meshes: plane splitting and support bases.

mod base;
mod cap;
mod split;

pub use base::{add_base, BaseError, BaseShape, BaseSpec, BaseWarning, CYLINDER_SEGMENTS};
pub use split::{split, split_multi, SplitError, SplitPlane};
