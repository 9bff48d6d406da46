//! Training-dynamics statistics and best-of-N curves.

mod bon;
mod plot;
mod stats;

pub use bon::{bon_curve, bon_estimate, bon_gap_fit, BonCurve, BonError, GapFit, GapStatus};
pub use plot::{line_chart_svg, Series};
pub use stats::{code_stats, CodeStats, StatsSummary};
