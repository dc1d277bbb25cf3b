//! Splittings of genus-two translation surfaces into slit tori, Dehn twist surgery on
//! the slits, and the binary tree of refinements whose limits are minimal nonergodic
//! directions. All predicates are exact over a real quadratic field.

pub mod error;
pub mod fieldgeom;
pub mod json;
pub mod search;
pub mod splitting;
pub mod surface;
pub mod tree;
pub mod twist;

pub use error::{Error, Result};
pub use fieldgeom::{cross, Lattice, QuadExt, Vec2};
pub use splitting::{Splitting, Stratum};
