//! Soft-margin kernel SVMs trained with SMO, and a one-vs-one multiclass wrapper.

mod multiclass;
mod smo;
mod standardize;

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use multiclass::{train_multiclass, MulticlassModel, PairModel, Prediction};
pub use smo::DualSolution;
pub use standardize::Standardizer;

const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("training data has only one class")]
    SingleClass,
    #[error("need at least two distinct labels, got {0}")]
    TooFewLabels(usize),
    #[error("empty training set")]
    Empty,
    #[error("{xs} samples but {ys} targets")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("sample {0} has a non-finite feature")]
    NonFinite(usize),
    #[error("target {0} is not -1 or +1")]
    BadTarget(usize),
    #[error("invalid SVM configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, SvmError> {
        if x.len() != y.len() {
            return Err(SvmError::DimensionMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: Kernel,
    pub kkt_tolerance: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
    /// Shuffles the working-set scan order; ties go to the earliest scanned sample.
    pub seed: u64,
    /// z-score features with training statistics before multiclass training.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 10.0,
            kernel: Kernel::Rbf { gamma: 0.027 },
            kkt_tolerance: 1e-3,
            max_passes: 1000,
            seed: 0,
            standardize: true,
        }
    }
}

impl SvmConfig {
    // Negated comparisons so that NaN fails validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |m: &str| Err(SvmError::InvalidConfig(m.into()));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("C must be positive");
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return bad("gamma must be positive");
            }
        }
        if !(self.kkt_tolerance > 0.0) {
            return bad("kkt_tolerance must be positive");
        }
        if self.max_passes == 0 {
            return bad("max_passes must be positive");
        }
        Ok(())
    }
}

/// A trained binary classifier: `f(x) = Σ coef_i K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub n_features: usize,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.n_features {
            return Err(SvmError::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// `+1` or `-1`; a score of exactly zero maps to `+1`.
    pub fn predict_sign(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }
}

pub(crate) fn check_features<X: AsRef<[f64]>>(xs: &[X]) -> Result<usize, SvmError> {
    let dim = xs.first().ok_or(SvmError::Empty)?.as_ref().len();
    for (i, x) in xs.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite(i));
        }
    }
    Ok(dim)
}

/// Trains a binary SVM on targets in `{-1, +1}`, returning the model and the
/// full dual solution.
pub fn train_binary_detailed<X: AsRef<[f64]>>(
    xs: &[X],
    ys: &[i8],
    cfg: &SvmConfig,
) -> Result<(SvmModel, DualSolution), SvmError> {
    cfg.validate()?;
    if xs.len() != ys.len() {
        return Err(SvmError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let dim = check_features(xs)?;
    if let Some(i) = ys.iter().position(|&y| y != 1 && y != -1) {
        return Err(SvmError::BadTarget(i));
    }
    if !(ys.contains(&1) && ys.contains(&-1)) {
        return Err(SvmError::SingleClass);
    }
    let y: Vec<f64> = ys.iter().map(|&v| f64::from(v)).collect();
    let params = smo::SmoParams {
        c: cfg.c,
        tolerance: cfg.kkt_tolerance,
        max_iterations: cfg.max_passes.saturating_mul(xs.len().max(10)),
        seed: cfg.seed,
        cache_bytes: CACHE_BYTES,
    };
    let solution = smo::solve(xs, &y, cfg.kernel, &params);
    let (support_vectors, dual_coefficients) = solution
        .alpha
        .iter()
        .zip(xs)
        .zip(&y)
        .filter(|((a, _), _)| **a > 0.0)
        .map(|((a, x), yi)| (x.as_ref().to_vec(), a * yi))
        .unzip();
    let model = SvmModel {
        kernel: cfg.kernel,
        support_vectors,
        dual_coefficients,
        bias: solution.bias,
        n_features: dim,
    };
    Ok((model, solution))
}

pub fn train_binary<X: AsRef<[f64]>>(xs: &[X], ys: &[i8], cfg: &SvmConfig) -> Result<SvmModel, SvmError> {
    train_binary_detailed(xs, ys, cfg).map(|(m, _)| m)
}

pub const MODEL_FORMAT: &str = "phonrec-svm";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container<T> {
    format: String,
    version: u32,
    model: T,
}

/// Serializes a model into the versioned JSON container. Floats are written
/// in shortest round-trip form, so reloading reproduces predictions exactly.
pub fn to_json<T: Serialize>(model: &T) -> Result<String, SvmError> {
    let c = Container {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model,
    };
    serde_json::to_string(&c).map_err(|e| SvmError::Format(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, SvmError> {
    let c: Container<T> = serde_json::from_str(text).map_err(|e| SvmError::Format(e.to_string()))?;
    if c.format != MODEL_FORMAT {
        return Err(SvmError::Format(format!("unexpected format tag {:?}", c.format)));
    }
    if c.version != MODEL_VERSION {
        return Err(SvmError::Format(format!("unsupported version {}", c.version)));
    }
    Ok(c.model)
}

pub fn save_model<T: Serialize>(path: &Path, model: &T) -> Result<(), SvmError> {
    fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load_model<T: DeserializeOwned>(path: &Path) -> Result<T, SvmError> {
    from_json(&fs::read_to_string(path)?)
}
