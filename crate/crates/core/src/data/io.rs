//! Plain-text formats: prediction files, rater-label files and cohort CSVs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Example, Label};
use crate::{Error, Result};

const PROBABILITY_HEADER: &str = "score,label";
const LOGIT_HEADER: &str = "logit,label";
const RATER_HEADER: &str = "rater_a,rater_b";

/// How the score column should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// Probabilities in `[0, 1]` (header `score,label`, or no header).
    Probability,
    /// Raw logits (header `logit,label`).
    Logit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub model_tag: String,
    pub kind: ScoreKind,
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl Predictions {
    /// Scores mapped to probabilities (logits go through the sigmoid).
    pub fn probabilities(&self) -> Vec<f64> {
        match self.kind {
            ScoreKind::Probability => self.scores.clone(),
            ScoreKind::Logit => self.scores.iter().map(|&z| crate::model::sigmoid(z)).collect(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_label(cell: &str, line: usize) -> Result<Label> {
    match cell.trim() {
        "0" => Ok(Label::NoOverlap),
        "1" => Ok(Label::Overlap),
        other => Err(parse_err(line, format!("unknown label value {other:?}"))),
    }
}

fn parse_f64(cell: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("non-numeric {what} {:?}", cell.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Parses a `score,label` prediction file body. Line numbers in errors are
/// 1-based.
pub fn parse_predictions(text: &str, model_tag: &str) -> Result<Predictions> {
    let mut kind = ScoreKind::Probability;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            if line == PROBABILITY_HEADER {
                continue;
            }
            if line == LOGIT_HEADER {
                kind = ScoreKind::Logit;
                continue;
            }
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 2 {
            return Err(parse_err(
                line_no,
                format!("expected 2 columns, found {}", cells.len()),
            ));
        }
        let score = parse_f64(cells[0], line_no, "score")?;
        if kind == ScoreKind::Probability && !(0.0..=1.0).contains(&score) {
            return Err(parse_err(line_no, format!("probability {score} outside [0, 1]")));
        }
        scores.push(score);
        labels.push(parse_label(cells[1], line_no)?);
    }
    if scores.is_empty() {
        return Err(parse_err(1, "no prediction rows"));
    }
    Ok(Predictions {
        model_tag: model_tag.to_string(),
        kind,
        scores,
        labels,
    })
}

/// Reads a prediction file; the model tag is the file stem.
pub fn load_predictions(path: &Path) -> Result<Predictions> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_predictions(&text, &tag)
}

pub fn write_predictions(preds: &Predictions) -> String {
    let mut out = String::new();
    out.push_str(match preds.kind {
        ScoreKind::Probability => PROBABILITY_HEADER,
        ScoreKind::Logit => LOGIT_HEADER,
    });
    out.push('\n');
    for (s, l) in preds.scores.iter().zip(&preds.labels) {
        let _ = writeln!(out, "{s},{}", l.bit());
    }
    out
}

/// Parses two columns of ordinal category indices, one case per row, with an
/// optional `rater_a,rater_b` header.
pub fn parse_rater_labels(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (idx == 0 && line == RATER_HEADER) {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 2 {
            return Err(parse_err(idx + 1, format!("expected 2 columns, found {}", cells.len())));
        }
        let parse = |c: &str| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(idx + 1, format!("invalid category index {:?}", c.trim())))
        };
        a.push(parse(cells[0])?);
        b.push(parse(cells[1])?);
    }
    if a.is_empty() {
        return Err(parse_err(1, "no rater rows"));
    }
    Ok((a, b))
}

pub fn load_rater_labels(path: &Path) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rater_labels(&text)
}

/// Cohort file layout: `id,client_id,label,f0,...,f{d-1}`.
pub fn write_dataset_csv(data: &Dataset) -> String {
    let mut out = String::from("id,client_id,label");
    for j in 0..data.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for ex in data.iter() {
        let _ = write!(out, "{},{},{}", ex.id, ex.client_id, ex.label.bit());
        for v in &ex.features {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty dataset file"))?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    if columns.len() < 4 || columns[..3] != ["id", "client_id", "label"] {
        return Err(parse_err(1, "expected header id,client_id,label,f0,..."));
    }
    let dim = columns.len() - 3;
    let mut examples = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + 3 {
            return Err(parse_err(
                line_no,
                format!("expected {} columns, found {}", dim + 3, cells.len()),
            ));
        }
        let id = cells[0]
            .parse()
            .map_err(|_| parse_err(line_no, "invalid id"))?;
        let client_id = cells[1]
            .parse()
            .map_err(|_| parse_err(line_no, "invalid client_id"))?;
        let label = parse_label(cells[2], line_no)?;
        let features = cells[3..]
            .iter()
            .map(|c| parse_f64(c, line_no, "feature"))
            .collect::<Result<Vec<_>>>()?;
        examples.push(Example {
            id,
            client_id,
            features,
            label,
        });
    }
    Dataset::new(dim, examples)
}
