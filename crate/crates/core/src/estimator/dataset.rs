use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::features::FeatureVector;
use crate::{seed, Error, Result};

/// Disjoint train / validation / test index sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the three sets are disjoint and cover `0..n` exactly.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

/// Label-stratified split with the given `[train, validation, test]` ratios.
///
/// Validation and test sizes are `⌊ratio · N⌋`; training takes the rest, so
/// 22 400 samples at 60/20/20 give exactly 13 440 / 4 480 / 4 480. Samples are
/// grouped by label (ascending), shuffled within each group, and dealt to the
/// splits in proportion, which keeps each label's share within about one
/// sample per split of its ideal value.
pub fn stratified_split(targets: &[usize], ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let n = targets.len();
    let n_val = (ratios[1] * n as f64 + 1e-9).floor() as usize;
    let n_test = (ratios[2] * n as f64 + 1e-9).floor() as usize;
    let sizes = [n - n_val - n_test, n_val, n_test];

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &t) in targets.iter().enumerate() {
        groups.entry(t).or_default().push(i);
    }
    let mut rng = seed::rng(seed);
    let mut order = Vec::with_capacity(n);
    for (_, mut g) in groups {
        g.shuffle(&mut rng);
        order.extend(g);
    }
    // Deal positions so every split tracks its target share of the prefix.
    let mut out: [Vec<usize>; 3] = Default::default();
    for (pos, &idx) in order.iter().enumerate() {
        let done = (pos + 1) as f64 / n as f64;
        let pick = (0..3)
            .filter(|&s| out[s].len() < sizes[s])
            .max_by(|&a, &b| {
                let da = sizes[a] as f64 * done - out[a].len() as f64;
                let db = sizes[b] as f64 * done - out[b].len() as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("sizes sum to n");
        out[pick].push(idx);
    }
    for s in out.iter_mut() {
        s.sort_unstable();
    }
    let [train, validation, test] = out;
    Ok(Split { train, validation, test })
}

/// Feature matrix (one sample per row), integer labels and their split.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DMatrix<f64>,
    pub targets: Vec<usize>,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(features: &[FeatureVector], targets: Vec<usize>, split: Split) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::DimensionMismatch { context: "dataset labels", expected: features.len(), got: targets.len() });
        }
        let p = features.first().map(|f| f.len()).unwrap_or(0);
        if let Some(bad) = features.iter().position(|f| f.len() != p) {
            return Err(Error::InvalidInput(format!("feature vector {bad} has length {} instead of {p}", features[bad].len())));
        }
        if !split.is_partition_of(features.len()) {
            return Err(Error::InvalidInput("split does not partition the dataset".into()));
        }
        let features = DMatrix::from_fn(features.len(), p, |r, c| features[r].0[c]);
        Ok(Self { features, targets, split })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Feature rows for `idx`.
    pub fn rows(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), self.features.ncols(), |r, c| self.features[(idx[r], c)])
    }

    pub fn labels(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.targets[i]).collect()
    }
}
