//! Locality and relative-feedback structure analysis for distributed LTI
//! controllers: structured realizations, system level parameterizations,
//! consensus infeasibility certificates and H2 evaluation on rings and tori.

pub mod consensus;
pub mod error;
pub mod graph;
pub mod lyapunov;
pub mod partition;
pub mod poly;
pub mod rational;
pub mod relative;
pub mod sampling;
pub mod sls;
pub mod spatial;
pub mod statespace;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{Graph, StructurePattern};
pub use partition::Partition;
pub use poly::Poly;
pub use rational::{RationalEntry, RationalMatrix};
pub use statespace::StateSpace;

