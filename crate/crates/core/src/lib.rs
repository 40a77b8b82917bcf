//! Recovery of structured signals that are sparse in an atomic set.
//!
//! The crate covers the full pipeline:
//!
//! * [`atoms`] — atomic sets (canonical basis, finite frames, rank-one
//!   matrix manifold), their norms, dual norms, best s-term
//!   approximations and tails.
//! * [`solvers`] — ADMM solvers for the constrained atomic-norm
//!   minimization programs, plus exact enumeration oracles for small
//!   instances.
//! * [`nsp`] — certification of the plain / stable / robust / strong
//!   null space properties, structural checks (splittable, s-even) and
//!   the associated recovery bounds.
//! * [`measure`] — subgaussian measurement ensembles, small-ball and
//!   width estimation, and the measurement-count machinery.
//! * [`experiments`] — a reproducible batch harness (phase transitions,
//!   bound verification, minimum-measurement studies) with CSV/JSON
//!   emission.
//!
//! Inner Monte-Carlo and enumeration loops are data parallel via rayon
//! when the `parallel` feature (default) is enabled; results are
//! bit-identical for any worker count because all randomness is derived
//! from per-trial seeds and aggregation happens in index order.

pub mod atoms;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod nsp;
pub mod par;
pub mod solvers;

pub use atoms::{AtomicSet, Frame, Shape, Signal, SparseDecomposition, TailResult};
pub use error::{Error, Result};
pub use par::Parallelism;
pub use solvers::{MeasurementOperator, SolveResult, SolverOptions};
