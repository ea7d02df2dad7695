//! Spatial entity linkage: QuadFlex blocking, pairwise similarity, skyline
//! ranking and SkyEx cut-off selection.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod geo;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod quadflex;
pub mod similarity;
pub mod skyex;
pub mod skyrank;

pub use error::{Error, Result};
pub use model::*;
