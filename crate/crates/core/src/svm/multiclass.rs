use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_features, train_binary, Standardizer, SvmConfig, SvmError, SvmModel};

/// Binary model for the label pair `(first, second)`; positive scores vote for `first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub first: usize,
    pub second: usize,
    pub model: SvmModel,
}

/// One-vs-one ensemble over a sorted label list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel<L> {
    pub labels: Vec<L>,
    pub standardizer: Option<Standardizer>,
    /// Every `(i, j)` with `i < j`, in lexicographic order.
    pub pairs: Vec<PairModel>,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<L> {
    pub label: L,
    /// Votes per label, aligned with `MulticlassModel::labels`.
    pub votes: Vec<usize>,
    /// Sum of `|decision|` over the pairwise wins of each label.
    pub margins: Vec<f64>,
}

impl<L: Clone> MulticlassModel<L> {
    /// Majority vote; ties go to the larger summed margin, then to the
    /// earlier (smaller) label.
    pub fn predict_detailed(&self, x: &[f64]) -> Result<Prediction<L>, SvmError> {
        if x.len() != self.n_features {
            return Err(SvmError::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let scaled;
        let x = match &self.standardizer {
            Some(s) => {
                scaled = s.transform(x);
                scaled.as_slice()
            }
            None => x,
        };
        let n = self.labels.len();
        let mut votes = vec![0usize; n];
        let mut margins = vec![0.0; n];
        for pair in &self.pairs {
            let d = pair.model.decision(x)?;
            let winner = if d >= 0.0 { pair.first } else { pair.second };
            votes[winner] += 1;
            margins[winner] += d.abs();
        }
        let mut best = 0;
        for k in 1..n {
            if votes[k] > votes[best] || (votes[k] == votes[best] && margins[k] > margins[best]) {
                best = k;
            }
        }
        Ok(Prediction {
            label: self.labels[best].clone(),
            votes,
            margins,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<L, SvmError> {
        self.predict_detailed(x).map(|p| p.label)
    }
}

/// Trains one binary SVM per unordered label pair on that pair's samples.
///
/// Labels are sorted; pairs train in parallel and the result does not depend
/// on scheduling.
pub fn train_multiclass<X, L>(xs: &[X], ys: &[L], cfg: &SvmConfig) -> Result<MulticlassModel<L>, SvmError>
where
    X: AsRef<[f64]> + Sync,
    L: Ord + Clone + Send + Sync,
{
    cfg.validate()?;
    if xs.len() != ys.len() {
        return Err(SvmError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let mut labels: Vec<L> = ys.to_vec();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(SvmError::TooFewLabels(labels.len()));
    }
    let n_features = check_features(xs)?;
    let standardizer = cfg.standardize.then(|| Standardizer::fit(xs));
    let inputs: Vec<Vec<f64>> = match &standardizer {
        Some(s) => xs.iter().map(|x| s.transform(x.as_ref())).collect(),
        None => xs.iter().map(|x| x.as_ref().to_vec()).collect(),
    };
    let class_of: Vec<usize> = ys
        .iter()
        .map(|y| labels.binary_search(y).expect("label collected above"))
        .collect();

    let pair_ids: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|i| (i + 1..labels.len()).map(move |j| (i, j)))
        .collect();
    let pairs = pair_ids
        .par_iter()
        .map(|&(first, second)| {
            let (sub_x, sub_y): (Vec<&[f64]>, Vec<i8>) = inputs
                .iter()
                .zip(&class_of)
                .filter(|(_, &c)| c == first || c == second)
                .map(|(x, &c)| (x.as_slice(), if c == first { 1 } else { -1 }))
                .unzip();
            let model = train_binary(&sub_x, &sub_y, cfg)?;
            Ok(PairModel { first, second, model })
        })
        .collect::<Result<Vec<_>, SvmError>>()?;

    Ok(MulticlassModel {
        labels,
        standardizer,
        pairs,
        n_features,
    })
}
