//! Dice overlap, paired signed-rank tests and report tables.

mod dice;
mod report;
mod stats;

pub use dice::{dice, tissue_dice};
pub use report::{
    build_report, parse_tissue, Cohort, CohortReport, Comparison, ComparisonRow, DscRecord, DscTable,
    MetricsReport, Summary, OVERALL,
};
pub use stats::{bonferroni, mean_sd, wilcoxon_signed_rank, SignedRankTest, ZeroMethod, EXACT_MAX_N};
