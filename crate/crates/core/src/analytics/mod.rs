//! Aggregate statistics over lifecycle traces.

mod frequency;
mod odds;
mod stats;
mod transitions;

pub use frequency::{
    break_durations, break_frequency, BreakFrequency, DeveloperBreakCounts, DurationRow,
    OrgFrequency,
};
pub use odds::{
    bin_by_project, fit_logistic_binary, gone_odds_ratio, odds_ratio, ContingencyTable,
    ContributionRecord, OddsRatioResult, LOGISTIC_AGREEMENT_TOLERANCE,
};
pub use stats::{
    cliffs_delta, holm_adjust, paired_medians, wilcoxon_holm_cliffs, wilcoxon_signed_rank,
    EffectMagnitude, PValueMethod, PairedTestResult, WilcoxonResult, EXACT_MAX_N,
};
pub use transitions::{transition_matrix, SelfLoopMode, TransitionCounts, TransitionMatrix};
