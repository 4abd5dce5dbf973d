use std::fmt::Write;

use super::confusion::mean_sets;
use super::{EvalError, MetricSet};

/// Unweighted mean of each metric across folds.
pub fn aggregate_folds(folds: &[MetricSet]) -> Result<MetricSet, EvalError> {
    if folds.is_empty() {
        return Err(EvalError::NoFolds);
    }
    Ok(mean_sets(folds))
}

/// Per-fold rows followed by an `Average` row, values as percentages with
/// two decimals.
pub fn render_fold_table(folds: &[MetricSet]) -> Result<String, EvalError> {
    let avg = aggregate_folds(folds)?;
    let mut out = String::new();
    let row = |out: &mut String, name: &str, m: &MetricSet| {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        writeln!(
            out,
            "{:<8} {:>9} {:>10} {:>8} {:>9}",
            name,
            pct(m.accuracy),
            pct(m.precision),
            pct(m.recall),
            pct(m.f1)
        )
        .expect("writing to a String");
    };
    writeln!(out, "{:<8} {:>9} {:>10} {:>8} {:>9}", "Fold", "Accuracy", "Precision", "Recall", "F1-score").unwrap();
    for (i, m) in folds.iter().enumerate() {
        row(&mut out, &format!("Fold {}", i + 1), m);
    }
    row(&mut out, "Average", &avg);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(v: f64) -> MetricSet {
        MetricSet {
            accuracy: v,
            precision: v,
            recall: v,
            f1: v,
        }
    }

    #[test]
    fn five_fold_average_renders_two_decimals() {
        let folds: Vec<MetricSet> = [0.9707, 0.9741, 0.9672, 0.9746, 0.9682].map(acc).to_vec();
        let avg = aggregate_folds(&folds).unwrap();
        assert!((avg.accuracy - 0.97096).abs() < 1e-12);
        let table = render_fold_table(&folds).unwrap();
        let last = table.lines().last().unwrap();
        assert!(last.starts_with("Average") && last.contains("97.10"), "{last}");
        assert_eq!(table.lines().count(), 7);
    }

    #[test]
    fn degenerate_inputs() {
        let one = MetricSet {
            accuracy: 0.5,
            precision: 0.25,
            recall: 0.125,
            f1: 0.2,
        };
        assert_eq!(aggregate_folds(&[one]).unwrap(), one);
        assert_eq!(aggregate_folds(&[one; 4]).unwrap(), one);
        assert_eq!(aggregate_folds(&[]), Err(EvalError::NoFolds));
    }
}
