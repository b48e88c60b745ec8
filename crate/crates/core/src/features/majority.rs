//! Majority-class baseline: always predict the most common labels.

use super::FeatureError;

/// Number of labels the majority baseline switches on.
pub const MAJORITY_TOP_K: usize = 3;

/// Bits set for the `MAJORITY_TOP_K` labels with the most positives in
/// `train_labels`; ties go to the lower class index.
pub fn majority_baseline(train_labels: &[Vec<u8>]) -> Result<Vec<u8>, FeatureError> {
    let width = train_labels.first().ok_or(FeatureError::Empty)?.len();
    if train_labels.iter().any(|l| l.len() != width) {
        return Err(FeatureError::Shape("label rows differ in length".into()));
    }
    let mut counts = vec![0usize; width];
    for row in train_labels {
        for (c, &b) in counts.iter_mut().zip(row) {
            *c += b as usize;
        }
    }
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), i));
    let mut out = vec![0u8; width];
    for &i in order.iter().take(MAJORITY_TOP_K) {
        out[i] = 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_with_counts(counts: &[usize]) -> Vec<Vec<u8>> {
        let n = *counts.iter().max().unwrap();
        (0..n)
            .map(|r| counts.iter().map(|&c| u8::from(r < c)).collect())
            .collect()
    }

    #[test]
    fn top_three() {
        let mut counts = vec![10, 9, 8, 1];
        counts.resize(11, 0);
        let got = majority_baseline(&rows_with_counts(&counts)).unwrap();
        assert_eq!(got, vec![1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn tie_for_third_goes_to_lower_index() {
        let got = majority_baseline(&rows_with_counts(&[1, 9, 5, 9, 5, 0])).unwrap();
        assert_eq!(got, vec![0, 1, 1, 1, 0, 0]);
    }
}
