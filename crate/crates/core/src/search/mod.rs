//! Construction, improvement, multistart orchestration and RMSD.

mod construct;
mod multistart;
mod rmsd;

pub use construct::{greedy_construction, improve, sign_restricted_domain, ImproveOutcome, TorsionAssignment};
pub use multistart::{
    multistart_solve, pack, unpack, ConformationPool, PoolEntry, SolveOutcome, SolvePhase, SolveStatus,
    StressObjective,
};
pub use rmsd::{kabsch_rmsd, optimal_rotation, superposed_rmsd, ALL_ATOM_LIMIT};
