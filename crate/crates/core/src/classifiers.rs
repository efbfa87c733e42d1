//! Deterministic base classifiers for smoothing: linear scorers, nearest
//! centroid, small feed-forward networks, and an analytic halfspace oracle
//! whose smoothed class probability is known in closed form (used by the
//! soundness tests).
//!
//! Models load from a single JSON document:
//!
//! ```json
//! {"kind": "linear", "dim": 3, "num_classes": 2,
//!  "weights": [/* num_classes * dim, row-major */], "bias": [/* num_classes */]}
//! {"kind": "nearest-centroid", "dim": 3, "num_classes": 4,
//!  "centroids": [/* num_classes * dim, row-major */]}
//! {"kind": "feed-forward", "dim": 3,
//!  "layers": [{"rows": 8, "cols": 3, "weights": [...], "bias": [...], "activation": "relu"}]}
//! {"kind": "halfspace", "dim": 3, "w": [...], "b": 0.25}
//! ```
//!
//! The loader rejects shape mismatches with an error naming the offending
//! file and field.

use std::path::Path;

use rand::distributions::Distribution;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::normal_cdf;
use crate::mechanisms::RandomSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Identity,
}

/// One dense layer: `rows x cols` weight matrix (row-major), bias of length
/// `rows`, and an elementwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub activation: Activation,
}

impl Layer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "layer weights: expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "layer bias: expected {rows} entries, got {}",
                bias.len()
            )));
        }
        Ok(Layer { weights, bias, rows, cols, activation })
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.bias[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(match self.activation {
                Activation::Relu => acc.max(0.0),
                Activation::Identity => acc,
            });
        }
        out
    }
}

/// A deterministic classifier `f(x) -> class index`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    /// `argmax(W x + b)` over `num_classes` rows.
    Linear { weights: Vec<Vec<f64>>, bias: Vec<f64> },
    /// Class of the nearest centroid (squared euclidean distance).
    NearestCentroid { centroids: Vec<Vec<f64>> },
    /// Dense feed-forward network; the last layer's outputs are the scores.
    FeedForward { layers: Vec<Layer> },
    /// Two-class halfspace: class 1 iff `w . x + b > 0`. The smoothed
    /// probability under Gaussian noise has a closed form, which makes this
    /// the soundness oracle.
    HalfspaceOracle { w: Vec<f64>, b: f64 },
}

impl ClassifierModel {
    pub fn linear(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid("linear model needs at least 2 classes"));
        }
        let dim = weights[0].len();
        if dim == 0 || weights.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch("linear rows must share a positive dim".into()));
        }
        if bias.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "bias length {} != class count {}",
                bias.len(),
                weights.len()
            )));
        }
        Ok(ClassifierModel::Linear { weights, bias })
    }

    pub fn nearest_centroid(centroids: Vec<Vec<f64>>) -> Result<Self> {
        if centroids.len() < 2 {
            return Err(Error::invalid("nearest-centroid model needs at least 2 classes"));
        }
        let dim = centroids[0].len();
        if dim == 0 || centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch("centroids must share a positive dim".into()));
        }
        Ok(ClassifierModel::NearestCentroid { centroids })
    }

    pub fn feed_forward(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("feed-forward model needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].cols != pair[0].rows {
                return Err(Error::DimensionMismatch(format!(
                    "layer shapes do not chain: {} outputs feed {} inputs",
                    pair[0].rows, pair[1].cols
                )));
            }
        }
        if layers.last().unwrap().rows < 2 {
            return Err(Error::invalid("output layer needs at least 2 classes"));
        }
        Ok(ClassifierModel::FeedForward { layers })
    }

    pub fn halfspace(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() || w.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("halfspace normal must be nonzero"));
        }
        Ok(ClassifierModel::HalfspaceOracle { w, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            ClassifierModel::Linear { weights, .. } => weights[0].len(),
            ClassifierModel::NearestCentroid { centroids } => centroids[0].len(),
            ClassifierModel::FeedForward { layers } => layers[0].cols,
            ClassifierModel::HalfspaceOracle { w, .. } => w.len(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            ClassifierModel::Linear { weights, .. } => weights.len(),
            ClassifierModel::NearestCentroid { centroids } => centroids.len(),
            ClassifierModel::FeedForward { layers } => layers.last().unwrap().rows,
            ClassifierModel::HalfspaceOracle { .. } => 2,
        }
    }

    /// Predicted class for `x`: argmax of the model scores, ties broken
    /// toward the smallest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} coordinates, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite input coordinate at {pos}")));
        }
        let scores: Vec<f64> = match self {
            ClassifierModel::Linear { weights, bias } => weights
                .iter()
                .zip(bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect(),
            ClassifierModel::NearestCentroid { centroids } => centroids
                .iter()
                .map(|c| -c.iter().zip(x).map(|(ci, v)| (ci - v) * (ci - v)).sum::<f64>())
                .collect(),
            ClassifierModel::FeedForward { layers } => {
                let mut h = x.to_vec();
                for layer in layers {
                    h = layer.forward(&h);
                }
                h
            }
            ClassifierModel::HalfspaceOracle { w, b } => {
                let margin = w.iter().zip(x).map(|(wi, v)| wi * v).sum::<f64>() + b;
                return Ok(if margin > 0.0 { 1 } else { 0 });
            }
        };
        Ok(argmax(&scores))
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Exact probability that the smoothed halfspace predicts class 1 under
/// `N(0, sigma^2 I)` noise: `Phi((w . x + b) / (sigma ||w||))`.
pub fn halfspace_smoothed_prob(w: &[f64], b: f64, x: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "w has {} coordinates, x has {}",
            w.len(),
            x.len()
        )));
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("halfspace normal must be nonzero"));
    }
    let margin = w.iter().zip(x).map(|(wi, v)| wi * v).sum::<f64>() + b;
    Ok(normal_cdf(margin / (sigma * norm)))
}

/// Point-to-hyperplane distance `|w . x + b| / ||w||`: the exact l2 robust
/// radius of the (un)smoothed halfspace at `x`.
pub fn halfspace_distance(w: &[f64], b: f64, x: &[f64]) -> Result<f64> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "w has {} coordinates, x has {}",
            w.len(),
            x.len()
        )));
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("halfspace normal must be nonzero"));
    }
    let margin = w.iter().zip(x).map(|(wi, v)| wi * v).sum::<f64>() + b;
    Ok(margin.abs() / norm)
}

// ---------------------------------------------------------------------------
// JSON model file format

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ModelFile {
    Linear {
        dim: usize,
        num_classes: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    NearestCentroid {
        dim: usize,
        num_classes: usize,
        centroids: Vec<f64>,
    },
    FeedForward {
        dim: usize,
        layers: Vec<LayerFile>,
    },
    Halfspace {
        dim: usize,
        w: Vec<f64>,
        b: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

fn model_err(path: &Path, message: impl Into<String>) -> Error {
    Error::ModelFile {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Load a classifier from its JSON description, validating every shape.
pub fn load_model(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| model_err(path, format!("cannot read: {e}")))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| model_err(path, format!("bad json: {e}")))?;
    let reject = |field: &str, msg: String| model_err(path, format!("{field}: {msg}"));

    match file {
        ModelFile::Linear { dim, num_classes, weights, bias } => {
            if weights.len() != num_classes * dim {
                return Err(reject(
                    "weights",
                    format!("expected {num_classes}x{dim} = {} entries, got {}",
                        num_classes * dim, weights.len()),
                ));
            }
            let rows = weights.chunks(dim).map(<[f64]>::to_vec).collect();
            ClassifierModel::linear(rows, bias)
                .map_err(|e| reject("linear", e.to_string()))
        }
        ModelFile::NearestCentroid { dim, num_classes, centroids } => {
            if centroids.len() != num_classes * dim {
                return Err(reject(
                    "centroids",
                    format!("expected {num_classes}x{dim} = {} entries, got {}",
                        num_classes * dim, centroids.len()),
                ));
            }
            let rows = centroids.chunks(dim).map(<[f64]>::to_vec).collect();
            ClassifierModel::nearest_centroid(rows)
                .map_err(|e| reject("nearest-centroid", e.to_string()))
        }
        ModelFile::FeedForward { dim, layers } => {
            let mut built = Vec::with_capacity(layers.len());
            for (i, l) in layers.into_iter().enumerate() {
                let layer = Layer::new(l.rows, l.cols, l.weights, l.bias, l.activation)
                    .map_err(|e| reject(&format!("layers[{i}]"), e.to_string()))?;
                built.push(layer);
            }
            if built.first().map(|l| l.cols) != Some(dim) {
                return Err(reject("layers[0]", format!("input width must equal dim = {dim}")));
            }
            ClassifierModel::feed_forward(built)
                .map_err(|e| reject("feed-forward", e.to_string()))
        }
        ModelFile::Halfspace { dim, w, b } => {
            if w.len() != dim {
                return Err(reject("w", format!("expected {dim} entries, got {}", w.len())));
            }
            ClassifierModel::halfspace(w, b).map_err(|e| reject("halfspace", e.to_string()))
        }
    }
}

/// Write a classifier as the JSON model document.
pub fn save_model(path: impl AsRef<Path>, model: &ClassifierModel) -> Result<()> {
    let file = match model {
        ClassifierModel::Linear { weights, bias } => ModelFile::Linear {
            dim: weights[0].len(),
            num_classes: weights.len(),
            weights: weights.iter().flatten().copied().collect(),
            bias: bias.clone(),
        },
        ClassifierModel::NearestCentroid { centroids } => ModelFile::NearestCentroid {
            dim: centroids[0].len(),
            num_classes: centroids.len(),
            centroids: centroids.iter().flatten().copied().collect(),
        },
        ClassifierModel::FeedForward { layers } => ModelFile::FeedForward {
            dim: layers[0].cols,
            layers: layers
                .iter()
                .map(|l| LayerFile {
                    rows: l.rows,
                    cols: l.cols,
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        },
        ClassifierModel::HalfspaceOracle { w, b } => ModelFile::Halfspace {
            dim: w.len(),
            w: w.clone(),
            b: *b,
        },
    };
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Seeded generators for desk-scale test models. No trained weights ship
/// with the repository.
pub mod generate {
    use super::*;

    /// Linear model with standard-normal weights and biases.
    pub fn random_linear(num_classes: usize, dim: usize, seed: RandomSeed) -> ClassifierModel {
        let mut rng = seed.rng();
        let mut draw = || StandardNormal.sample(&mut rng);
        let weights = (0..num_classes)
            .map(|_| (0..dim).map(|_| draw()).collect())
            .collect();
        let bias = (0..num_classes).map(|_| draw()).collect();
        ClassifierModel::linear(weights, bias).expect("generated shapes are consistent")
    }

    /// Nearest-centroid model with standard-normal centroids.
    pub fn random_centroids(num_classes: usize, dim: usize, seed: RandomSeed) -> ClassifierModel {
        let mut rng = seed.rng();
        let centroids = (0..num_classes)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        ClassifierModel::nearest_centroid(centroids).expect("generated shapes are consistent")
    }

    /// One-hidden-layer ReLU network with standard-normal parameters.
    pub fn random_feed_forward(
        dim: usize,
        hidden: usize,
        num_classes: usize,
        seed: RandomSeed,
    ) -> ClassifierModel {
        let mut rng = seed.rng();
        let mut draw_vec = |n: usize| -> Vec<f64> {
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let l1 = Layer::new(hidden, dim, draw_vec(hidden * dim), draw_vec(hidden), Activation::Relu)
            .expect("generated shapes are consistent");
        let l2 = Layer::new(
            num_classes,
            hidden,
            draw_vec(num_classes * hidden),
            draw_vec(num_classes),
            Activation::Identity,
        )
        .expect("generated shapes are consistent");
        ClassifierModel::feed_forward(vec![l1, l2]).expect("generated shapes are consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_identity_rows_pick_the_hot_coordinate() {
        let eye = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let m = ClassifierModel::linear(eye, vec![0.0; 3]).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0, 1.0]).unwrap(), 2);
        assert_eq!(m.predict(&[0.0, 1.0, 0.0]).unwrap(), 1);
        // Ties break toward the smallest index.
        assert_eq!(m.predict(&[1.0, 1.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn centroid_model_recovers_its_centroid() {
        let m = ClassifierModel::nearest_centroid(vec![
            vec![0.0, 0.0],
            vec![5.0, 0.0],
            vec![0.0, 5.0],
            vec![5.0, 5.0],
        ])
        .unwrap();
        assert_eq!(m.predict(&[0.0, 5.0]).unwrap(), 2);
        assert_eq!(m.predict(&[4.9, 4.8]).unwrap(), 3);
    }

    #[test]
    fn feed_forward_matches_hand_computation() {
        // Hidden: relu([[1,-1,0],[0,2,1]] x + [0.5, -1]); out: [[1,0],[0,1]] h.
        let l1 = Layer::new(
            2,
            3,
            vec![1.0, -1.0, 0.0, 0.0, 2.0, 1.0],
            vec![0.5, -1.0],
            Activation::Relu,
        )
        .unwrap();
        let l2 = Layer::new(
            2,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap();
        let m = ClassifierModel::feed_forward(vec![l1, l2]).unwrap();
        // x = [1, 2, 3]: hidden = relu([1-2+0.5, 4+3-1]) = [0, 6] -> class 1.
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap(), 1);
        // x = [3, 0, 0]: hidden = relu([3.5, -1]) = [3.5, 0] -> class 0.
        assert_eq!(m.predict(&[3.0, 0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn halfspace_sign_and_errors() {
        let m = ClassifierModel::halfspace(vec![1.0, 0.0], -0.5).unwrap();
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), 1);
        assert_eq!(m.predict(&[0.0, 7.0]).unwrap(), 0);
        assert_eq!(m.predict(&[0.5, 0.0]).unwrap(), 0); // boundary goes to class 0
        assert_eq!(m.num_classes(), 2);
        assert!(ClassifierModel::halfspace(vec![0.0, 0.0], 1.0).is_err());
        assert!(m.predict(&[1.0]).is_err());
        assert!(m.predict(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn smoothed_probability_closed_form() {
        let w = [3.0, 4.0]; // norm 5
        assert!((halfspace_smoothed_prob(&w, 0.0, &[0.0, 0.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        // margin / (sigma ||w||) = 1 -> Phi(1).
        let p = halfspace_smoothed_prob(&w, 5.0, &[0.0, 0.0], 1.0).unwrap();
        assert!((p - 0.841344746068543).abs() < 1e-9);
        assert!(halfspace_smoothed_prob(&w, 0.0, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn hyperplane_distance() {
        let d = halfspace_distance(&[3.0, 4.0], -5.0, &[0.0, 0.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_validation() {
        assert!(ClassifierModel::linear(vec![vec![1.0, 2.0], vec![3.0]], vec![0.0, 0.0]).is_err());
        assert!(ClassifierModel::linear(vec![vec![1.0]], vec![0.0]).is_err());
        assert!(Layer::new(2, 2, vec![1.0; 3], vec![0.0; 2], Activation::Relu).is_err());
        let l1 = Layer::new(3, 2, vec![0.0; 6], vec![0.0; 3], Activation::Relu).unwrap();
        let l2 = Layer::new(2, 4, vec![0.0; 8], vec![0.0; 2], Activation::Identity).unwrap();
        assert!(ClassifierModel::feed_forward(vec![l1, l2]).is_err());
    }

    #[test]
    fn json_round_trip_and_shape_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");

        let m = generate::random_feed_forward(4, 6, 3, RandomSeed(9));
        save_model(&path, &m).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(m, loaded);
        let probe = [0.3, -0.2, 1.4, 0.0];
        assert_eq!(m.predict(&probe).unwrap(), loaded.predict(&probe).unwrap());

        // Mismatched weight count is rejected with the path in the message.
        let bad = r#"{"kind":"linear","dim":3,"num_classes":2,"weights":[1,2,3,4,5],"bias":[0,0]}"#;
        std::fs::write(&path, bad).unwrap();
        let err = load_model(&path).unwrap_err().to_string();
        assert!(err.contains("model.json") && err.contains("weights"), "{err}");
    }

    #[test]
    fn generators_are_deterministic() {
        let a = generate::random_linear(3, 5, RandomSeed(11));
        let b = generate::random_linear(3, 5, RandomSeed(11));
        assert_eq!(a, b);
        assert_ne!(a, generate::random_linear(3, 5, RandomSeed(12)));
    }
}
