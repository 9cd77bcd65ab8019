//! Entangled multi-Cesàro ergodic averages on concrete systems.

pub mod error;
pub mod operators;
pub mod space;
pub mod systems;
pub mod engine;
pub mod limits;
pub mod oracle;

pub use error::{Error, Result};
pub use operators::{apply_operator, OperatorSpec, ProbeReport};
pub use space::{FunctionRep, Norm, Shape, Window, C64};
pub use systems::SystemDescriptor;
