use serde::{Deserialize, Serialize};

use super::{harmonic, ratio, EvalError};

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.k, other.k, "class counts differ");
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (&a, &p) in y_true.iter().zip(y_pred) {
        for id in [a, p] {
            if id >= k {
                return Err(EvalError::IdOutOfRange { id, k });
            }
        }
        cm.counts[a][p] += 1;
    }
    Ok(cm)
}

/// One-vs-rest tallies for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSet {
    fn from_counts(c: ClassCounts, flag: &mut bool) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp, flag);
        let recall = ratio(c.tp, c.tp + c.fn_, flag);
        Self {
            accuracy: ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn_, flag),
            precision,
            recall,
            f1: harmonic(precision, recall, flag),
        }
    }

    fn mean(items: &[MetricSet]) -> MetricSet {
        let n = items.len() as f64;
        // Mean of offsets from the first value; identical values average exactly.
        let sum = |f: fn(&MetricSet) -> f64| {
            let base = f(&items[0]);
            base + items.iter().map(|m| f(m) - base).sum::<f64>() / n
        };
        MetricSet {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub counts: Vec<ClassCounts>,
    pub per_class: Vec<MetricSet>,
    /// Unweighted mean over classes of each per-class value.
    pub macro_avg: MetricSet,
    /// Metrics of the pooled one-vs-rest tallies.
    pub micro_avg: MetricSet,
    /// Fraction of samples on the diagonal.
    pub overall_accuracy: f64,
    /// Some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

impl ClassMetrics {
    /// The row reported per fold: overall accuracy with macro precision, recall and F1.
    pub fn summary(&self) -> MetricSet {
        MetricSet {
            accuracy: self.overall_accuracy,
            ..self.macro_avg
        }
    }
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<ClassMetrics, EvalError> {
    let total = cm.total();
    if total == 0 || cm.k == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let counts: Vec<ClassCounts> = (0..cm.k)
        .map(|c| {
            let tp = cm.counts[c][c];
            let row: u64 = cm.counts[c].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
            ClassCounts {
                tp,
                fp: col - tp,
                fn_: row - tp,
                tn: total + tp - row - col,
            }
        })
        .collect();
    let mut flag = false;
    let per_class: Vec<MetricSet> = counts.iter().map(|&c| MetricSet::from_counts(c, &mut flag)).collect();
    let pooled = counts.iter().fold(ClassCounts::default(), |a, c| ClassCounts {
        tp: a.tp + c.tp,
        fp: a.fp + c.fp,
        fn_: a.fn_ + c.fn_,
        tn: a.tn + c.tn,
    });
    Ok(ClassMetrics {
        macro_avg: MetricSet::mean(&per_class),
        micro_avg: MetricSet::from_counts(pooled, &mut flag),
        overall_accuracy: cm.trace() as f64 / total as f64,
        counts,
        per_class,
        zero_division: flag,
    })
}

pub(crate) fn mean_sets(items: &[MetricSet]) -> MetricSet {
    MetricSet::mean(items)
}
