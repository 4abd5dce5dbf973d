use serde::{Deserialize, Serialize};

use super::EvalError;

/// One-vs-rest ROC curve. `thresholds[i]` produced the point `(fpr[i], tpr[i])`;
/// a sample is called positive when its score is at least the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// Sweeps every distinct score plus `+inf` and `-inf`. Returns `None` when
/// only one of the two classes is present, where the curve is undefined.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Option<RocCurve> {
    assert_eq!(scores.len(), positive.len(), "one label per score");
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let (mut fpr, mut tpr) = (vec![0.0], vec![0.0]);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(s);
        fpr.push(fp as f64 / neg as f64);
        tpr.push(tp as f64 / pos as f64);
    }
    thresholds.push(f64::NEG_INFINITY);
    fpr.push(1.0);
    tpr.push(1.0);

    let auc = fpr
        .windows(2)
        .zip(tpr.windows(2))
        .map(|(f, t)| (f[1] - f[0]) * (t[1] + t[0]) / 2.0)
        .sum();
    Some(RocCurve { thresholds, fpr, tpr, auc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    /// `None` for classes absent from (or covering all of) `y_true`.
    pub per_class: Vec<Option<RocCurve>>,
    /// Curve over every pooled (sample, class) decision.
    pub micro: Option<RocCurve>,
    /// Mean AUC over the classes whose curve is defined.
    pub macro_auc: Option<f64>,
}

/// `scores` holds one row of `k` class scores per sample.
pub fn roc_auc(scores: &[Vec<f64>], y_true: &[usize], k: usize) -> Result<RocReport, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidInput("ROC analysis needs at least two classes".into()));
    }
    if scores.len() != y_true.len() {
        return Err(EvalError::LengthMismatch(scores.len(), y_true.len()));
    }
    for (row, &y) in scores.iter().zip(y_true) {
        if row.len() != k {
            return Err(EvalError::LengthMismatch(row.len(), k));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::InvalidInput("non-finite score".into()));
        }
        if y >= k {
            return Err(EvalError::IdOutOfRange { id: y, k });
        }
    }
    let per_class: Vec<Option<RocCurve>> = (0..k)
        .map(|c| {
            let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let p: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
            roc_curve(&s, &p)
        })
        .collect();
    let pooled_scores: Vec<f64> = scores.iter().flatten().copied().collect();
    let pooled_labels: Vec<bool> = y_true.iter().flat_map(|&y| (0..k).map(move |c| c == y)).collect();
    let defined: Vec<f64> = per_class.iter().flatten().map(|c| c.auc).collect();
    Ok(RocReport {
        micro: roc_curve(&pooled_scores, &pooled_labels),
        macro_auc: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        per_class,
    })
}
