//! Task-set analysis of multi-agent gameplay.
//!
//! Trajectories are reduced to per-tick affordance/completion masks, masks to
//! simultaneous affordance-completion curves, and curves to per-player
//! feature vectors that are embedded and compared across populations. A
//! seeded 4v4 arena simulator supplies trajectories with planted behavior.

pub mod tasksets;
pub mod telemetry;
pub mod curves;
pub mod manifold;
pub mod overlap;
pub mod simulator;
pub mod analysis;

use std::borrow::Cow;

/// Quotes a CSV field when it contains a delimiter, quote or line break.
pub fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}
