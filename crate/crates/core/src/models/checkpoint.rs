use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{AffineScorer, Link, RecurrentClassifier, Trainable, WindowMlp};
use crate::classifier::Classifier;
use crate::error::{Error, Result};

/// Any built-in model, as stored in a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Affine(AffineScorer),
    Mlp(WindowMlp),
    Recurrent(RecurrentClassifier),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Affine(_) => "affine",
            Model::Mlp(_) => "mlp",
            Model::Recurrent(_) => "recurrent",
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Affine(m) => m,
            Model::Mlp(m) => m,
            Model::Recurrent(m) => m,
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Model::Affine(m) => m.params(),
            Model::Mlp(m) => m.params(),
            Model::Recurrent(m) => m.params(),
        }
    }
}

impl Classifier for Model {
    fn input_shape(&self) -> (usize, usize) {
        self.inner().input_shape()
    }
    fn num_classes(&self) -> usize {
        self.inner().num_classes()
    }
    fn predict(&self, window: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.inner().predict(window)
    }
    fn grad(&self, window: ArrayView2<'_, f64>, class: usize) -> Result<Array2<f64>> {
        self.inner().grad(window, class)
    }
    fn is_probabilistic(&self) -> bool {
        self.inner().is_probabilistic()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointShape {
    pub window: usize,
    pub features: usize,
    pub classes: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub link: Option<Link>,
}

/// `{"kind", "shape", "params", "seed"}`; `params` in the model's documented layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: String,
    pub shape: CheckpointShape,
    pub params: Vec<f64>,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_model(model: &Model, seed: u64) -> Self {
        let (window, features) = model.input_shape();
        let classes = model.num_classes();
        let (hidden, link) = match model {
            Model::Affine(m) => (None, Some(m.link())),
            Model::Mlp(m) => (Some(m.hidden_width()), None),
            Model::Recurrent(m) => (Some(m.state_width()), None),
        };
        Self {
            kind: model.kind().to_string(),
            shape: CheckpointShape {
                window,
                features,
                classes,
                hidden,
                link,
            },
            params: model.params().to_vec(),
            seed,
        }
    }

    pub fn into_model(self) -> Result<Model> {
        let s = self.shape;
        let need_hidden = || {
            s.hidden.ok_or_else(|| {
                Error::Schema(format!("{} checkpoint lacks shape.hidden", self.kind))
            })
        };
        match self.kind.as_str() {
            "affine" => Ok(Model::Affine(AffineScorer::from_flat(
                s.window,
                s.features,
                s.classes,
                s.link.unwrap_or(Link::Softmax),
                self.params,
            )?)),
            "mlp" => Ok(Model::Mlp(WindowMlp::from_flat(
                s.window,
                s.features,
                need_hidden()?,
                s.classes,
                self.params,
            )?)),
            "recurrent" => Ok(Model::Recurrent(RecurrentClassifier::from_flat(
                s.window,
                s.features,
                need_hidden()?,
                s.classes,
                self.params,
            )?)),
            other => Err(Error::Schema(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}
