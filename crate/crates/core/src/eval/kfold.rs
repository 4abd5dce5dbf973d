use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Fold id of every sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stream used for the unstratified global shuffle; class `c` uses stream `c`.
const GLOBAL_STREAM: u64 = u64::MAX;

/// Shuffles (within each class when `stratified`) and deals samples to folds
/// round-robin. The dealing position carries over from one class to the next,
/// so overall fold sizes also differ by at most one.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64, stratified: bool) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewSamples(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(EvalError::TooFewSamples(format!("{} samples cannot fill {k} folds", labels.len())));
    }
    let shuffled = |mut idx: Vec<usize>, stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        idx.shuffle(&mut rng);
        idx
    };
    let groups: Vec<Vec<usize>> = if stratified {
        let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut by_class = vec![Vec::new(); classes];
        for (i, &c) in labels.iter().enumerate() {
            by_class[c].push(i);
        }
        by_class
            .into_iter()
            .enumerate()
            .map(|(c, idx)| shuffled(idx, c as u64))
            .collect()
    } else {
        vec![shuffled((0..labels.len()).collect(), GLOBAL_STREAM)]
    };

    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for group in groups {
        for i in group {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments })
}
