//! Bounded ε-reach sets of deterministic, transversal linear hybrid automata.
//!
//! Starting from a small ℓ∞ ball around one initial state, the [`engine`]
//! propagates a convex polygon through each location's affine flow, keeps a
//! γ-neighborhood of it as the stored over-approximation, and tracks the
//! accumulated floating-point error ρ. Jumps are confirmed only when they are
//! provably deterministic and transversal; otherwise the step is rejected and
//! the [`policy`] picks smaller parameters.
//!
//! The [`oracle`] module is an independent RK4 simulator used to check the
//! engine's output.

pub mod engine;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod policy;

pub use engine::{run, EngineConfig, EngineError, ErrorKind, Problem, ReachResult, ReachStep, RunError, Termination};
pub use geometry::{Point, Polytope};
pub use linalg::NumericsBudget;
pub use model::{InitialCondition, LhaModel, LocationId};
pub use policy::{DefaultPolicy, Policy, PolicyDecision};
