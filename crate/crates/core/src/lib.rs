//! C-numerical ranges and radii of complex matrices, computed with gradient
//! flows on the unitary group and on its subgroups (local unitaries,
//! stabilizers), with applications to pure-state entanglement, local time
//! reversal and constrained transfer optimization.

pub mod constrained;
pub mod error;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod local;
pub mod range;
pub mod reversal;

mod ascent;

pub use error::{Error, Result};
pub use flow::{FlowConfig, FlowResult, Growth, LambdaSchedule, Objective, Trajectory};
pub use linalg::{ComplexMatrix, CSpectrum, UnitaryMatrix, C64};
pub use local::{DensityMatrix, LocalUnitary, PureState};
pub use range::{BoundaryCurve, BoundaryOptions};
