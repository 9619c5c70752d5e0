//! Significance machinery: DeLong's test for correlated AUCs, the exact
//! Wilcoxon signed-rank test, weighted Cohen's kappa, Bonferroni correction
//! and the comparison-plan table built from them.

mod correction;
mod delong;
mod kappa;
mod table;
mod wilcoxon;

pub use correction::{bonferroni, format_p_value, TestResult};
pub use delong::{delong_test, placement_values, DelongResult, Placements};
pub use kappa::{weighted_kappa, KappaResult, Weighting};
pub use table::{
    build_significance_table, standard_plan, AucEvidence, Comparison, Family, Footnote, ModelRef,
    Setting, SignificanceRow,
};
pub use wilcoxon::{
    wilcoxon_normal_approx, wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_PAIRS,
};

/// Two-sided standard-normal tail probability `P(|Z| >= |z|)`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}
