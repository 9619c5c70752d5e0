use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Nominal alpha before any correction.
    pub alpha: f64,
    /// Size of the Bonferroni family; 1 means uncorrected.
    pub family_size: usize,
    pub corrected: bool,
    pub significant: bool,
    /// Set when the statistic came from a degenerate-case rule.
    pub degenerate: bool,
}

impl TestResult {
    pub fn new(test_name: &str, statistic: f64, p_value: f64, alpha: f64) -> Self {
        Self {
            test_name: test_name.to_string(),
            statistic,
            p_value,
            alpha,
            family_size: 1,
            corrected: false,
            significant: p_value < alpha,
            degenerate: false,
        }
    }

    pub fn effective_alpha(&self) -> f64 {
        self.alpha / self.family_size as f64
    }
}

/// Bonferroni: compares each p-value with `alpha / family_size`. P-values are
/// left as they are; only the significance flags change.
pub fn bonferroni(results: &[TestResult], family_size: usize) -> Vec<TestResult> {
    let family_size = family_size.max(1);
    results
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.family_size = family_size;
            r.corrected = family_size > 1;
            r.significant = r.p_value < r.effective_alpha();
            r
        })
        .collect()
}

/// Scientific notation with four significant digits and a two-digit signed
/// exponent, e.g. `1.043e-03`.
pub fn format_p_value(p: f64) -> String {
    let s = format!("{p:.3e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let exp: i32 = exp.parse().unwrap_or(0);
            let sign = if exp < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", exp.abs())
        }
        None => s,
    }
}
