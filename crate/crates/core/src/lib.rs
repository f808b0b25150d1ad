//! Variable-stepsize distributed forward-backward splitting.
//!
//! A splitting method is described by coefficient matrices `(D, M, N, P, R)`
//! acting on `n` resolvent operators `A_i` and `p` cocoercive operators `B_j`.
//! The [`engine`] evaluates the fixed-point operator
//! `T_{θ,γ} z = z - θ Mᵀ x^γ(z)`, the [`relocator`] moves points between the
//! fixed-point sets of different stepsizes, and the [`driver`] runs the
//! relocated iteration
//!
//! ```text
//! x_k     = x^{γ_k}(z_k)
//! w_k     = z_k - λ_k θ_k Mᵀ x_k
//! z_{k+1} = Q_{γ_{k+1} <- γ_k}(w_k)
//! ```
//!
//! Graph-derived methods (including Davis–Yin at `n = 2`) are built by [`graph`].
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod driver;
pub mod engine;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod relocator;
pub mod scalar;
pub mod schedule;
pub mod scheme;

pub use driver::{run, run_davis_yin, Monitor, RunConfig, RunStatus, Trace, TraceRow};
pub use engine::{apply_t, residuals, sweep, Residuals, SplitProblem, Splitting, SweepResult};
pub use error::{Error, Result};
pub use graph::{CanonicalKind, DiGraph, PredecessorMap};
pub use linalg::{kron_apply, project_range_of_m, pseudoinverse, BlockVector, DenseMatrix};
pub use operators::{check_resolvent_identity, CocoerciveOp, ResolventOp};
pub use relocator::RelocatorKind;
pub use scalar::Scalar;
pub use schedule::{RelaxationPlan, StepsizeSchedule, TRule, ZetaRule};
pub use scheme::{CoefficientScheme, Condition, Violation};

pub type BlockVectorF64 = BlockVector<f64>;
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type SchemeF64 = CoefficientScheme<f64>;
pub type SplittingF64 = Splitting<f64>;
pub type SplitProblemF64 = SplitProblem<f64>;
pub type TraceF64 = Trace<f64>;

pub type BlockVectorF32 = BlockVector<f32>;
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type SchemeF32 = CoefficientScheme<f32>;
