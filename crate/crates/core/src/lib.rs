//! Constrained Fermat-Weber location.
//!
//! Minimizes `f(x) = Σ w_i ‖x − a_i‖` over a closed convex set `C` with the
//! projected Weiszfeld iteration `x_{k+1} = Π_C(T(x_k))`, certifies candidate
//! points, probes how the solution moves under anchor perturbations, and
//! ships two independent reference solvers for cross-checking.

pub mod certify;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod problem;
pub mod sets;
pub mod stability;
pub mod weiszfeld;

pub use certify::{certify, Certificate, CertificateKind, Verdict};
pub use error::{Error, Result};
pub use problem::{vector, AnchorSet, ProblemInstance, Tolerances, Vector};
pub use sets::ConstraintSet;
pub use weiszfeld::{solve, SolveResult, SolveStatus, TraceRecord};
