use serde::{Deserialize, Serialize};

use crate::dsp::INPUT_LEN;
use crate::error::{Error, Result};
use crate::types::N_BANDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { out: usize },
    /// Stride 1, zero padding that preserves length; `width` must be odd.
    Conv1d { filters: usize, width: usize },
    MaxPool { width: usize },
    Elu,
    Sigmoid,
    Relu,
    Flatten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    /// Mean absorption through sigmoid gates.
    Alpha,
    /// Inverse mean absorption through ReLU.
    InverseAlpha,
    /// Mean absorption and mean scattering through sigmoid gates.
    AlphaAndScattering,
}

impl OutputHead {
    pub fn dim(self) -> usize {
        match self {
            OutputHead::AlphaAndScattering => 2 * N_BANDS,
            _ => N_BANDS,
        }
    }

    pub fn activation(self) -> LayerSpec {
        match self {
            OutputHead::InverseAlpha => LayerSpec::Relu,
            _ => LayerSpec::Sigmoid,
        }
    }
}

/// Architecture without the output layer; the head appends a dense layer of
/// `head.dim()` units and its activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub architecture: Vec<LayerSpec>,
    pub head: OutputHead,
}

impl ModelSpec {
    pub fn mlp(head: OutputHead) -> Self {
        use LayerSpec::*;
        ModelSpec {
            input_dim: INPUT_LEN,
            architecture: vec![
                Dense { out: 128 },
                Elu,
                Dense { out: 64 },
                Elu,
                Dense { out: 32 },
                Elu,
            ],
            head,
        }
    }

    pub fn cnn(head: OutputHead) -> Self {
        use LayerSpec::*;
        ModelSpec {
            input_dim: INPUT_LEN,
            architecture: vec![
                Conv1d { filters: 64, width: 33 },
                MaxPool { width: 4 },
                Elu,
                Conv1d { filters: 32, width: 17 },
                MaxPool { width: 4 },
                Elu,
                Conv1d { filters: 16, width: 9 },
                MaxPool { width: 4 },
                Elu,
                Flatten,
                Dense { out: 32 },
                Elu,
            ],
            head,
        }
    }

    /// Full layer sequence including the output layer.
    pub fn layers(&self) -> Vec<LayerSpec> {
        let mut layers = self.architecture.clone();
        layers.push(LayerSpec::Dense { out: self.head.dim() });
        layers.push(self.head.activation());
        layers
    }

    /// `(channels, length)` after every layer, starting with the input.
    pub fn shapes(&self) -> Result<Vec<(usize, usize)>> {
        let mut shape = (1, self.input_dim);
        let mut out = vec![shape];
        for layer in self.layers() {
            shape = match layer {
                LayerSpec::Dense { out } => (1, out),
                LayerSpec::Conv1d { filters, width } => {
                    if width % 2 == 0 {
                        return Err(Error::Shape(format!("conv width {width} must be odd")));
                    }
                    (filters, shape.1)
                }
                LayerSpec::MaxPool { width } => {
                    if width == 0 || shape.1 % width != 0 {
                        return Err(Error::Shape(format!(
                            "pool width {width} does not divide length {}",
                            shape.1
                        )));
                    }
                    (shape.0, shape.1 / width)
                }
                LayerSpec::Flatten => (1, shape.0 * shape.1),
                _ => shape,
            };
            out.push(shape);
        }
        Ok(out)
    }
}
