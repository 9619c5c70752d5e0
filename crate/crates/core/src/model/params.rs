use serde::{Deserialize, Serialize};

use super::PredictorSpec;
use crate::{Error, Result};

/// Named slice of the flat parameter vector. `shape` is row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamBlock {
    pub fn size(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.size()
    }
}

/// Flat model parameters plus the layout that names each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    layout: Vec<ParamBlock>,
    values: Vec<f64>,
}

impl ParamVector {
    /// Layout for `spec`: per layer `layer{i}.weight` `[out, in]` followed by
    /// `layer{i}.bias` `[out]`.
    pub fn layout_for(spec: &PredictorSpec) -> Vec<ParamBlock> {
        let mut layout = Vec::new();
        let mut offset = 0;
        for (i, w) in spec.layer_sizes().windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            layout.push(ParamBlock {
                name: format!("layer{i}.weight"),
                shape: vec![fan_out, fan_in],
                offset,
            });
            offset += fan_in * fan_out;
            layout.push(ParamBlock {
                name: format!("layer{i}.bias"),
                shape: vec![fan_out],
                offset,
            });
            offset += fan_out;
        }
        layout
    }

    pub fn zeros(spec: &PredictorSpec) -> Self {
        Self {
            layout: Self::layout_for(spec),
            values: vec![0.0; spec.n_params()],
        }
    }

    pub fn from_values(layout: Vec<ParamBlock>, values: Vec<f64>) -> Result<Self> {
        let mut expected_offset = 0;
        for block in &layout {
            if block.offset != expected_offset {
                return Err(Error::InvalidInput(format!(
                    "block {} starts at {}, expected {expected_offset}",
                    block.name, block.offset
                )));
            }
            expected_offset += block.size();
        }
        if expected_offset != values.len() {
            return Err(Error::Shape {
                expected: expected_offset,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("parameter vector has non-finite entries".into()));
        }
        Ok(Self { layout, values })
    }

    /// Reassembles a vector from per-block pieces, in layout order.
    pub fn from_blocks(layout: Vec<ParamBlock>, blocks: &[Vec<f64>]) -> Result<Self> {
        if blocks.len() != layout.len() {
            return Err(Error::Shape {
                expected: layout.len(),
                actual: blocks.len(),
            });
        }
        for (block, piece) in layout.iter().zip(blocks) {
            if block.size() != piece.len() {
                return Err(Error::Shape {
                    expected: block.size(),
                    actual: piece.len(),
                });
            }
        }
        Self::from_values(layout, blocks.concat())
    }

    pub fn to_blocks(&self) -> Vec<Vec<f64>> {
        self.layout
            .iter()
            .map(|b| self.values[b.range()].to_vec())
            .collect()
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.values[b.range()])
    }

    pub fn layout(&self) -> &[ParamBlock] {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.layout == other.layout
    }

    /// A vector with this layout and the given values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_values(self.layout.clone(), values)
    }

    pub fn matches(&self, spec: &PredictorSpec) -> bool {
        self.layout == Self::layout_for(spec)
    }

    /// Euclidean distance to `other`; layouts must agree.
    pub fn distance(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
