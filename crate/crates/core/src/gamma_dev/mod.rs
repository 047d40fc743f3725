//! First-order diagnostics linking minimizers of H_n to the limit energy H:
//! even/odd competitors, the exact splitting of the interaction energy, the
//! resulting lower bound on H_{1,n}, and compactness indicators over n-sweeps.

mod bounds;
mod competitors;
mod diagnostics;
mod sweep;

pub use bounds::{first_order_lower_bound, splitting_identity_check, LowerBound, SplittingIdentity};
pub use competitors::{build_competitors, build_even_odd, CompetitorPair, ConstructionTrace, TraceStep};
pub use diagnostics::{compactness_diagnostics, jump_detect_sqrt_n, CompactnessRecord, CompactnessReport, JumpSet};
pub use sweep::{
    run_sweep, stretched_measure, DegenerateCriterion, SweepConfig, SweepFailure, SweepResults, SweepRow, SweepSummary,
};
