//! Optimality conditions and Noether charges for variational problems with a
//! constant time delay,
//!
//! ```text
//! J[q] = int_{t1}^{t2} L(t, q(t), ..., q^(m)(t), q(t - tau), ..., q^(m)(t - tau)) dt,
//! ```
//!
//! checked numerically along piecewise-polynomial trajectories.
//!
//! The crate evaluates the action, the Euler-Lagrange equations in
//! differential and integral form, the DuBois-Reymond condition, invariance
//! of the action under a candidate symmetry and the associated Noether
//! charge. A small direct-transcription solver produces minimizers for
//! first-order problems.
//!
//! ```
//! use delay_noether::{document::ProblemDocument, noether, report::Sampling, scenarios};
//!
//! let doc = scenarios::delay_counterexample();
//! let problem = doc.problem().unwrap();
//! let corner = doc.trajectory(Some("el_only")).unwrap();
//! let sym = doc.symmetry().unwrap();
//! let report = noether::check_conservation(&problem, &corner, &sym, &Sampling::default()).unwrap();
//! assert!(!report.report.verdict.holds());
//! ```

pub mod conditions;
pub mod document;
pub mod error;
pub mod expr;
pub mod functional;
pub mod noether;
pub mod quadrature;
pub mod report;
pub mod scenarios;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
pub use expr::{parse, Expression};
pub use functional::{Problem, ProblemDefinition};
pub use trajectory::PiecewiseTrajectory;
