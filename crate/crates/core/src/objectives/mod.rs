//! Online estimators of MSPBE and MSBR that decouple sample statistics from
//! the parameter, and the two SCE algorithms built on them.

mod sce;
mod trackers;

pub use sce::{
    run_sce_msbrm, run_sce_msbrm_spiral, run_sce_mspbem, MsbrParam, RunOptions, SceOutcome,
    TraceRecord,
};
pub use trackers::{
    jb_estimate, jp_estimate, msbr_tracker_step, mspbe_tracker_step, nl_jb_estimate,
    nl_msbr_tracker_step, MsbrTracker, MspbeTracker, NlMsbrTracker, SpiralTables,
};
