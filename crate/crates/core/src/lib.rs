//! Coined discrete-time quantum walks on `Z^d` with on-demand full-state
//! revivals.
//!
//! A walk alternates a coin toss `C` on the `c`-level internal state with a
//! coin-conditioned shift by `e_j`. Replacing the coin by a suitable
//! antidiagonal `G` once per cycle of `l + 1` steps sends every initial state
//! back to itself (up to a global phase) after two cycles. The crate covers:
//!
//! * [`state`], [`lattice`], [`linalg`]: sparse states, geometry, matrices.
//! * [`coins`]: coin families, the admissibility test and `G` construction.
//! * [`engine`]: position-space evolution and intervention schedules.
//! * [`kspace`]: quasi-momentum identities and a torus evolution oracle.
//! * [`metrics`]: fidelity, return probability and partial Pólya numbers.

pub mod coins;
pub mod engine;
pub mod error;
pub mod kspace;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod state;

pub use coins::{
    check_admissible, coin_su2, construct_g, grover_coin, hadamard_coin, random_admissible_coin,
    verify_conjugation, CoinFamily, CoinSpec, PhaseData,
};
pub use engine::{
    build_plan, run_plan, InterventionPlan, PlanSpec, RunOptions, StepKind, Trajectory,
};
pub use error::{Error, Result};
pub use kspace::{torus_evolve, verify_identities, IdentityReport, Quasimomentum, VerifyConfig};
pub use lattice::LatticeGeometry;
pub use linalg::{check_unitary, CMatrix, Complex, UnitaryMatrix};
pub use metrics::{
    fidelity, partial_polya, polya_estimate, return_probability, PolyaKind, PolyaSeries,
};
pub use state::{inner_product, norm, WalkState};
