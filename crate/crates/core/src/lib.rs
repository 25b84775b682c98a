//! Exact sparse state-vector simulation of Kitaev quantum double models
//! for the groups Z2 and S3.

pub mod error;
pub mod experiments;
pub mod group;
pub mod lattice;
pub mod protocols;
pub mod state;
pub mod toric;

pub use error::{Error, Result};
pub use group::{FiniteGroup, IrrepLabel};
pub use lattice::{Boundary, Lattice, SiteRegistry};
pub use state::{Basis, Key, Layout, Mode, SiteOp, SparseState};
