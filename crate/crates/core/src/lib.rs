//! Nonlinear n-term B-spline approximation in BMO over regular multilevel
//! partitions of a compact window.

pub mod bspline;
pub mod calibration;
pub mod constants;
pub mod corpus;
pub mod error;
pub mod funcspace;
pub mod localpoly;
pub mod norms;
pub mod nterm;
pub mod partition;

pub use error::{Error, Result};
pub use funcspace::{Func, Interval, LocalPoly, PiecewisePoly, QuadratureRule};
pub use partition::{MultilevelPartition, NestedStructure, SupportIndex};
