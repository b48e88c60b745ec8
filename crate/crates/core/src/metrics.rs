//! Multi-label evaluation: Hamming accuracy, exact match, micro
//! precision/recall/F1 and macro F1.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no clips to evaluate")]
    Empty,
    #[error("{0}")]
    Shape(String),
    #[error("entry {value} at clip {clip}, label {label} is not 0/1")]
    NonBinary { clip: usize, label: usize, value: u8 },
}

/// Confusion counts of one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl LabelCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        harmonic(self.precision(), self.recall())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub num_clips: usize,
    pub hamming_accuracy: f64,
    pub exact_match: f64,
    pub precision_micro: f64,
    pub recall_micro: f64,
    pub f_micro: f64,
    pub f_macro: f64,
    pub per_label: Vec<LabelCounts>,
}

/// Column names of [`EvalReport::table_row`].
pub const TABLE_COLUMNS: [&str; 6] = ["accuracy", "exact_match", "precision", "recall", "f_micro", "f_macro"];

pub fn evaluate(predicted: &[Vec<u8>], truth: &[Vec<u8>]) -> Result<EvalReport, MetricsError> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::Shape(format!(
            "{} predicted rows for {} truth rows",
            predicted.len(),
            truth.len()
        )));
    }
    let width = truth.first().ok_or(MetricsError::Empty)?.len();
    if width == 0 {
        return Err(MetricsError::Shape("label rows are empty".into()));
    }
    let mut per_label = vec![LabelCounts::default(); width];
    let mut correct_bits = 0u64;
    let mut exact = 0u64;
    for (clip, (p, t)) in predicted.iter().zip(truth).enumerate() {
        if p.len() != width || t.len() != width {
            return Err(MetricsError::Shape(format!(
                "clip {clip}: {} predicted and {} true labels, expected {width}",
                p.len(),
                t.len()
            )));
        }
        let mut row_ok = true;
        for (label, ((&pb, &tb), c)) in p.iter().zip(t).zip(per_label.iter_mut()).enumerate() {
            for value in [pb, tb] {
                if value > 1 {
                    return Err(MetricsError::NonBinary { clip, label, value });
                }
            }
            match (pb, tb) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
            if pb == tb {
                correct_bits += 1;
            } else {
                row_ok = false;
            }
        }
        exact += u64::from(row_ok);
    }
    let n = truth.len();
    let tp: u64 = per_label.iter().map(|c| c.tp).sum();
    let fp: u64 = per_label.iter().map(|c| c.fp).sum();
    let fn_: u64 = per_label.iter().map(|c| c.fn_).sum();
    let precision_micro = ratio(tp, tp + fp);
    let recall_micro = ratio(tp, tp + fn_);
    let f_macro = per_label.iter().map(LabelCounts::f1).sum::<f64>() / width as f64;
    Ok(EvalReport {
        num_clips: n,
        hamming_accuracy: ratio(correct_bits, (n * width) as u64),
        exact_match: ratio(exact, n as u64),
        precision_micro,
        recall_micro,
        f_micro: harmonic(precision_micro, recall_micro),
        f_macro,
        per_label,
    })
}

/// Thresholds scores into 0/1 labels (`score >= threshold` is 1).
pub fn binarize(scores: &[Vec<f64>], threshold: f64) -> Vec<Vec<u8>> {
    scores
        .iter()
        .map(|row| row.iter().map(|&s| u8::from(s >= threshold)).collect())
        .collect()
}

impl EvalReport {
    /// The six headline values in [`TABLE_COLUMNS`] order.
    pub fn table_values(&self) -> [f64; 6] {
        [
            self.hamming_accuracy,
            self.exact_match,
            self.precision_micro,
            self.recall_micro,
            self.f_micro,
            self.f_macro,
        ]
    }

    /// `model,accuracy,...` CSV row.
    pub fn table_row(&self, model: &str) -> String {
        let mut row = model.to_owned();
        for v in self.table_values() {
            let _ = write!(row, ",{v:.6}");
        }
        row
    }

    /// Header line for [`Self::table_row`].
    pub fn table_header() -> String {
        format!("model,{}", TABLE_COLUMNS.join(","))
    }

    /// Flat `key=value` report. `classes` names the per-label lines and must
    /// match the label count.
    pub fn to_text(&self, model: &str, classes: &[String]) -> String {
        let mut out = String::new();
        out.push_str("# precision and recall are micro-averaged over all labels\n");
        let _ = writeln!(out, "model={model}");
        let _ = writeln!(out, "clips={}", self.num_clips);
        for (name, v) in TABLE_COLUMNS.iter().zip(self.table_values()) {
            let _ = writeln!(out, "{name}={v:.6}");
        }
        for (i, c) in self.per_label.iter().enumerate() {
            let name = classes
                .get(i)
                .map_or_else(|| format!("label{i}"), |s| s.replace(' ', "_"));
            let _ = writeln!(
                out,
                "label.{name}=tp:{} fp:{} fn:{} tn:{} f1:{:.6}",
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.f1()
            );
        }
        let _ = writeln!(out, "{}", Self::table_header());
        let _ = writeln!(out, "{}", self.table_row(model));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(on: &[usize]) -> Vec<u8> {
        (0..11).map(|i| u8::from(on.contains(&i))).collect()
    }

    #[test]
    fn hand_counted_example() {
        let truth = vec![row(&[0, 1]), row(&[0])];
        let pred = vec![row(&[0]), row(&[0, 2])];
        let r = evaluate(&pred, &truth).unwrap();
        assert_eq!(r.precision_micro, 2.0 / 3.0);
        assert_eq!(r.recall_micro, 2.0 / 3.0);
        assert!((r.f_micro - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.exact_match, 0.0);
        assert_eq!(r.hamming_accuracy, 20.0 / 22.0);
    }

    #[test]
    fn perfect_prediction() {
        let truth = vec![row(&[1, 4]), row(&[0]), row(&[])];
        let r = evaluate(&truth, &truth).unwrap();
        assert_eq!(r.table_values()[..5], [1.0; 5]);
        // labels never positive have F1 0 by convention
        assert!((r.f_macro - 3.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn all_zero_predictor() {
        let truth = vec![row(&[1, 4]), row(&[0])];
        let r = evaluate(&[row(&[]), row(&[])], &truth).unwrap();
        assert_eq!(
            (r.precision_micro, r.recall_micro, r.f_micro, r.f_macro),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn bad_inputs_rejected() {
        assert_eq!(evaluate(&[], &[]), Err(MetricsError::Empty));
        assert!(evaluate(&[row(&[])], &[row(&[]), row(&[])]).is_err());
        assert!(evaluate(&[vec![2; 11]], &[row(&[])]).is_err());
        assert!(evaluate(&[vec![0; 10]], &[row(&[])]).is_err());
    }

    #[test]
    fn text_report_has_table_row() {
        let truth = vec![row(&[0])];
        let text = evaluate(&truth, &truth).unwrap().to_text("cnn", &[]);
        assert!(text.contains("accuracy=1.000000\n"));
        assert!(text.contains("model,accuracy,exact_match,precision,recall,f_micro,f_macro\ncnn,1.000000"));
    }
}
