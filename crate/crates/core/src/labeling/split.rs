//! Track-level multi-label stratified split (greedy iterative stratification).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabelError;

const TRAIN: usize = 0;
const TEST: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// Positive tracks per class on each side: `(train, test)`.
    pub coverage: Vec<(usize, usize)>,
}

/// Splits tracks so that each label's positives are spread in proportion to
/// `test_fraction`.
///
/// Labels are processed rarest-first (fewest unassigned positive tracks, ties
/// by label index). The label's unassigned tracks are placed one at a time on
/// the side with the larger remaining quota for that label, then the larger
/// overall remaining quota, then a seeded coin flip. The track placed is the
/// one whose other labels most want that side (seeded order on ties). When a
/// side still lacks the label and only as many of its tracks remain as there
/// are lacking sides, the track is placed on a lacking side, so any label held
/// by two or more tracks ends up on both sides. Likewise, once the unassigned
/// tracks only just suffice to give every empty side one track, they go to the
/// empty sides. Tracks with no labels fill the overall quotas last.
pub fn stratified_split(
    track_labels: &BTreeMap<String, Vec<u8>>,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitResult, LabelError> {
    if track_labels.is_empty() {
        return Err(LabelError::Split("no tracks to split".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LabelError::Split(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let ids: Vec<&String> = track_labels.keys().collect();
    let labels: Vec<&Vec<u8>> = track_labels.values().collect();
    let num_labels = labels[0].len();
    if let Some((id, l)) = track_labels.iter().find(|(_, l)| l.len() != num_labels) {
        return Err(LabelError::Split(format!(
            "track {id:?} has {} labels, expected {num_labels}",
            l.len()
        )));
    }

    let fractions = [1.0 - test_fraction, test_fraction];
    let positives: Vec<Vec<usize>> = (0..num_labels)
        .map(|l| (0..ids.len()).filter(|&t| labels[t][l] == 1).collect())
        .collect();
    let mut quota = fractions.map(|f| f * ids.len() as f64);
    let mut label_quota: Vec<[f64; 2]> = positives
        .iter()
        .map(|p| fractions.map(|f| f * p.len() as f64))
        .collect();
    let mut have = vec![[0usize; 2]; num_labels];
    let mut remaining: Vec<usize> = positives.iter().map(Vec::len).collect();
    let mut side_of: Vec<Option<usize>> = vec![None; ids.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let assign = |t: usize,
                  side: usize,
                  side_of: &mut [Option<usize>],
                  quota: &mut [f64; 2],
                  label_quota: &mut [[f64; 2]],
                  have: &mut [[usize; 2]],
                  remaining: &mut [usize]| {
        side_of[t] = Some(side);
        quota[side] -= 1.0;
        for (l, &bit) in labels[t].iter().enumerate() {
            if bit == 1 {
                label_quota[l][side] -= 1.0;
                have[l][side] += 1;
                remaining[l] -= 1;
            }
        }
    };

    while let Some(label) = (0..num_labels)
        .filter(|&l| remaining[l] > 0)
        .min_by_key(|&l| (remaining[l], l))
    {
        let mut tracks: Vec<usize> = positives[label]
            .iter()
            .copied()
            .filter(|&t| side_of[t].is_none())
            .collect();
        tracks.shuffle(&mut rng);
        while !tracks.is_empty() {
            let lacking: Vec<usize> = [TRAIN, TEST].into_iter().filter(|&s| have[label][s] == 0).collect();
            let empty = empty_sides(&side_of);
            let side = if !empty.is_empty() && unassigned(&side_of) <= empty.len() {
                pick(&empty, &label_quota[label], &quota, &mut rng)
            } else if positives[label].len() >= 2 && !lacking.is_empty() && remaining[label] <= lacking.len() {
                pick(&lacking, &label_quota[label], &quota, &mut rng)
            } else {
                pick(&[TRAIN, TEST], &label_quota[label], &quota, &mut rng)
            };
            let k = best_track(&tracks, side, label, &labels, &positives, &label_quota, &fractions);
            let t = tracks.remove(k);
            assign(
                t,
                side,
                &mut side_of,
                &mut quota,
                &mut label_quota,
                &mut have,
                &mut remaining,
            );
        }
    }

    let mut unlabeled: Vec<usize> = (0..ids.len()).filter(|&t| side_of[t].is_none()).collect();
    unlabeled.shuffle(&mut rng);
    for t in unlabeled {
        let empty = empty_sides(&side_of);
        let side = if !empty.is_empty() && unassigned(&side_of) <= empty.len() {
            pick(&empty, &quota, &quota, &mut rng)
        } else {
            pick(&[TRAIN, TEST], &quota, &quota, &mut rng)
        };
        assign(
            t,
            side,
            &mut side_of,
            &mut quota,
            &mut label_quota,
            &mut have,
            &mut remaining,
        );
    }

    let mut result = SplitResult {
        train: Vec::new(),
        test: Vec::new(),
        coverage: have.iter().map(|h| (h[TRAIN], h[TEST])).collect(),
    };
    for (t, side) in side_of.into_iter().enumerate() {
        match side.expect("every track assigned") {
            TRAIN => result.train.push(ids[t].clone()),
            _ => result.test.push(ids[t].clone()),
        }
    }
    Ok(result)
}

/// Position in `tracks` of the track whose other labels most want `side`:
/// the sum over its labels of the difference between the fractions of each
/// side's target still open. The first track wins ties.
fn best_track(
    tracks: &[usize],
    side: usize,
    label: usize,
    labels: &[&Vec<u8>],
    positives: &[Vec<usize>],
    label_quota: &[[f64; 2]],
    fractions: &[f64; 2],
) -> usize {
    let open = |l: usize, s: usize| label_quota[l][s] / (fractions[s] * positives[l].len() as f64);
    let score = |t: usize| -> f64 {
        labels[t]
            .iter()
            .enumerate()
            .filter(|&(l, &b)| b == 1 && l != label)
            .map(|(l, _)| open(l, side) - open(l, 1 - side))
            .sum()
    };
    let mut best = 0;
    let mut best_score = score(tracks[0]);
    for (k, &t) in tracks.iter().enumerate().skip(1) {
        let s = score(t);
        if s > best_score {
            best = k;
            best_score = s;
        }
    }
    best
}

fn empty_sides(side_of: &[Option<usize>]) -> Vec<usize> {
    [TRAIN, TEST]
        .into_iter()
        .filter(|&s| !side_of.contains(&Some(s)))
        .collect()
}

fn unassigned(side_of: &[Option<usize>]) -> usize {
    side_of.iter().filter(|s| s.is_none()).count()
}

/// Among `sides`, the one with the largest label quota, then largest overall
/// quota, then a coin flip.
fn pick(sides: &[usize], label_quota: &[f64; 2], quota: &[f64; 2], rng: &mut impl Rng) -> usize {
    if sides.len() == 1 {
        return sides[0];
    }
    let key = |s: usize| (label_quota[s], quota[s]);
    let (a, b) = (key(sides[0]), key(sides[1]));
    if a > b {
        sides[0]
    } else if b > a {
        sides[1]
    } else if rng.gen_bool(0.5) {
        sides[0]
    } else {
        sides[1]
    }
}
