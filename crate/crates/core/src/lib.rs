//! Solver toolkit for the stratified center-location problem: choose `p`
//! center sites minimizing the weighted sum, over strata, of each stratum's
//! largest allocation distance.
//!
//! The crate bundles:
//! - instance handling (pmed graph files, explicit matrices, strata JSON,
//!   random generation) in [`instance`] and [`gen`];
//! - the sorted distinct-distance ladders behind the covering formulations in
//!   [`index`];
//! - a mixed-binary linear programming engine (bounded-variable simplex,
//!   branch and bound, MPS import/export) in [`milp`];
//! - all model families `F1`..`F5` with their variants, relaxations, valid
//!   inequalities, and fixing support in [`formulations`];
//! - variable-fixing preprocessing in [`preprocess`];
//! - combinatorial ground truth in [`exact`];
//! - the sampling heuristic for the probabilistic variant in [`saa`].
//!
//! The `parallel` feature (on by default) runs subset enumeration and
//! per-stratum bound computation on rayon; disabling it yields a fully
//! sequential build with bit-identical results.

pub mod exact;
pub mod formulations;
pub mod gen;
pub mod index;
pub mod instance;
pub mod milp;
mod par;
pub mod preprocess;
pub mod rng;
pub mod saa;

pub use exact::{brute_force, evaluate_centers, CenterSet, Solution};
pub use formulations::{build_formulation, extract_centers, F5Linking, Family, FormulationSpec};
pub use index::DistanceIndex;
pub use instance::{DistanceMatrix, Instance, StrataSet};
pub use milp::{lp_gap, lp_relax_solve, milp_solve, MilpModel, SolveLimits};
pub use preprocess::{compute_fixset, FixSet, PreprocessMode};
pub use saa::{exact_ppcp, expected_max_objective, saa_run, PpcpInstance, SaaParams};
