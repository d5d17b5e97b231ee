//! Contribution-rhythm break detection and lifecycle analytics for
//! open-source core developers.
//!
//! The pipeline runs in five stages, each usable on its own:
//!
//! 1. [`ingestion`] parses commit logs and forge event exports into
//!    per-developer, organization-wide [`DeveloperTimeline`]s.
//! 2. [`core_dev`] selects core developers by Truck Factor or by the
//!    commit-share heuristic.
//! 3. [`rhythm`] extracts pauses between commit days and flags
//!    longer-than-usual ones with a sliding-window far-out-value threshold.
//! 4. [`lifecycle`] splits each break into non-coding, inactive and gone
//!    segments and names the transitions between them.
//! 5. [`analytics`] aggregates traces into frequency tables, duration
//!    summaries, transition matrices, paired tests and odds ratios.
//!
//! [`pipeline`] wires the stages together and writes the CSV artifacts.

pub mod analytics;
pub mod core_dev;
pub mod error;
pub mod ingestion;
pub mod lifecycle;
pub mod pipeline;
pub mod rhythm;

pub use error::{Error, Result};
pub use ingestion::{ActivityEvent, DeveloperTimeline};
pub use lifecycle::{LifecycleTrace, State};
pub use rhythm::{DetectedBreak, DetectorConfig};
