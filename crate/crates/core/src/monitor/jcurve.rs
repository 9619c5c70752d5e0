use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::eval::{confusion_at, score_dataset};
use crate::model::{ParamVector, PredictorSpec};
use crate::{Error, Result};

/// Candidate thresholds shared by every client, with an id the server uses
/// to check that curves are comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub version: String,
    pub points: Vec<f64>,
}

impl ThresholdGrid {
    pub const DEFAULT_SIZE: usize = 101;

    /// `n` evenly spaced points on `[0, 1]` (`n = 1` gives `[0.5]`).
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("threshold grid needs at least one point".into()));
        }
        let points = if n == 1 {
            vec![0.5]
        } else {
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        };
        Ok(Self { version: format!("uniform-{n}"), points })
    }

    /// An arbitrary strictly increasing grid; the version is a content hash.
    pub fn custom(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("threshold grid must be non-empty and finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("threshold grid must be strictly increasing".into()));
        }
        let mut h = Sha256::new();
        for p in &points {
            h.update(p.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { version: format!("custom-{hex}"), points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT_SIZE).expect("non-empty grid")
    }
}

/// Youden's J over a shared grid, computed by one client on its own
/// validation data. Carries no example-level information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCurve {
    pub client_id: u32,
    pub grid_version: String,
    pub thresholds: Vec<f64>,
    pub j_values: Vec<f64>,
}

/// Client side: score the local validation split and evaluate J at every
/// grid threshold.
pub fn compute_j_curve(
    client_id: u32,
    params: &ParamVector,
    spec: &PredictorSpec,
    validation: &Dataset,
    grid: &ThresholdGrid,
) -> Result<JCurve> {
    if !validation.has_both_classes() {
        return Err(Error::ThresholdUndefined(format!(
            "client {client_id}: validation split has a single class"
        )));
    }
    let scores = score_dataset(params, spec, validation)?;
    let labels = validation.labels();
    let j_values = grid
        .points
        .iter()
        .map(|&t| Ok(confusion_at(&scores, &labels, t)?.youden_j()))
        .collect::<Result<_>>()?;
    Ok(JCurve {
        client_id,
        grid_version: grid.version.clone(),
        thresholds: grid.points.clone(),
        j_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    Mean,
    Median,
    WorstCase,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 3] = [AggregationRule::Mean, AggregationRule::Median, AggregationRule::WorstCase];

    /// Aggregate of values sorted ascending, so the result does not depend
    /// on client order.
    fn apply(self, sorted: &[f64]) -> f64 {
        let n = sorted.len();
        match self {
            AggregationRule::Mean => sorted.iter().sum::<f64>() / n as f64,
            AggregationRule::Median if n % 2 == 1 => sorted[n / 2],
            AggregationRule::Median => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
            AggregationRule::WorstCase => sorted[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedThreshold {
    pub rule: AggregationRule,
    pub threshold: f64,
    pub aggregate_j: f64,
    /// The pointwise aggregate over the grid.
    pub curve: Vec<f64>,
}

/// Server side: aggregate J pointwise across clients and pick the grid
/// threshold with the highest aggregate (smallest threshold on ties).
pub fn aggregate_thresholds(curves: &[JCurve], rule: AggregationRule) -> Result<AggregatedThreshold> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidInput("no J-curves to aggregate".into()))?;
    for c in curves {
        if c.grid_version != first.grid_version
            || c.thresholds != first.thresholds
            || c.j_values.len() != first.thresholds.len()
        {
            return Err(Error::GridMismatch(format!(
                "client {} curve (grid {}) does not match client {} (grid {})",
                c.client_id, c.grid_version, first.client_id, first.grid_version
            )));
        }
    }
    let curve: Vec<f64> = (0..first.thresholds.len())
        .map(|i| {
            let mut column: Vec<f64> = curves.iter().map(|c| c.j_values[i]).collect();
            column.sort_by(f64::total_cmp);
            rule.apply(&column)
        })
        .collect();
    let mut best = 0;
    for (i, &j) in curve.iter().enumerate() {
        if j > curve[best] {
            best = i;
        }
    }
    Ok(AggregatedThreshold {
        rule,
        threshold: first.thresholds[best],
        aggregate_j: curve[best],
        curve,
    })
}
