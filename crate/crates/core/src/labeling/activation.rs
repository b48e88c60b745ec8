//! Activation-confidence tables and clip-level label generation.

use super::LabelError;

/// Timestamps may deviate from a perfectly uniform grid by this much.
pub const TIME_TOLERANCE: f64 = 1e-9;

/// Per-instrument activation confidences of one track on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTable {
    pub track_id: String,
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// One confidence series per column, each `times.len()` long.
    pub series: Vec<Vec<f64>>,
}

impl ActivationTable {
    pub fn new(
        track_id: &str,
        times: Vec<f64>,
        columns: Vec<String>,
        series: Vec<Vec<f64>>,
    ) -> Result<Self, LabelError> {
        let bad = |reason: String| LabelError::Table {
            track_id: track_id.to_owned(),
            reason,
        };
        if times.len() < 2 {
            return Err(bad(format!("{} time steps, need at least 2", times.len())));
        }
        if series.len() != columns.len() {
            return Err(bad(format!("{} columns but {} series", columns.len(), series.len())));
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(bad("times are not strictly increasing".into()));
        }
        for (i, pair) in times.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(bad(format!("time {} at row {} does not increase", pair[1], i + 2)));
            }
        }
        for (i, &t) in times.iter().enumerate() {
            if (t - (times[0] + i as f64 * step)).abs() > TIME_TOLERANCE {
                return Err(bad(format!(
                    "time {t} at row {} is off the uniform {step} s grid",
                    i + 1
                )));
            }
        }
        for (name, s) in columns.iter().zip(&series) {
            if s.len() != times.len() {
                return Err(bad(format!(
                    "column {name:?} has {} values for {} times",
                    s.len(),
                    times.len()
                )));
            }
            if let Some(v) = s.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(bad(format!("column {name:?} has confidence {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            track_id: track_id.to_owned(),
            times,
            columns,
            series,
        })
    }

    /// Parses the CSV layout `time,<instrument>,...` followed by rows of
    /// seconds and confidences.
    pub fn parse_csv(track_id: &str, text: &str) -> Result<Self, LabelError> {
        let bad = |reason: String| LabelError::Table {
            track_id: track_id.to_owned(),
            reason,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let mut head = header.split(',').map(str::trim);
        if !head.next().is_some_and(|h| h.eq_ignore_ascii_case("time")) {
            return Err(bad(format!("header {header:?} does not start with \"time\"")));
        }
        let columns: Vec<String> = head.map(str::to_owned).collect();
        let mut times = Vec::new();
        let mut series = vec![Vec::new(); columns.len()];
        for (i, line) in lines.enumerate() {
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
            if values.len() != columns.len() + 1 {
                return Err(bad(format!(
                    "row {} has {} fields, header has {}",
                    i + 2,
                    values.len(),
                    columns.len() + 1
                )));
            }
            times.push(values[0]);
            for (s, &v) in series.iter_mut().zip(&values[1..]) {
                s.push(v);
            }
        }
        Self::new(track_id, times, columns, series)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for s in &self.series {
                out.push_str(&format!(",{}", s[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn step(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// End of the annotated range: the last time plus one step.
    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1] + self.step()
    }
}

/// Number of samples in a window of `window_seconds` on a grid of `step`.
pub fn window_samples(step: f64, window_seconds: f64) -> Result<usize, LabelError> {
    let w = (window_seconds / step).round();
    if !(w >= 1.0) {
        return Err(LabelError::Window { window_seconds, step });
    }
    Ok(w as usize)
}

/// Centered moving average over `w` samples. Sample `t` averages
/// `[t - w/2, t - w/2 + w)` (integer division); at the edges the window is
/// truncated and the mean taken over the samples that exist.
pub fn moving_average(series: &[f64], step: f64, window_seconds: f64) -> Result<Vec<f64>, LabelError> {
    let w = window_samples(step, window_seconds)?;
    let n = series.len();
    Ok((0..n)
        .map(|t| {
            let start = t.saturating_sub(w / 2);
            let end = (t + w - w / 2).min(n);
            let window = &series[start..end];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// Moving averages of every column, computed once per track.
#[derive(Debug, Clone)]
pub struct SmoothedActivations<'a> {
    table: &'a ActivationTable,
    smoothed: Vec<Vec<f64>>,
}

impl<'a> SmoothedActivations<'a> {
    pub fn new(table: &'a ActivationTable, window_seconds: f64) -> Result<Self, LabelError> {
        let step = table.step();
        let smoothed = table
            .series
            .iter()
            .map(|s| moving_average(s, step, window_seconds))
            .collect::<Result<_, _>>()?;
        Ok(Self { table, smoothed })
    }

    /// `label[i] = 1` iff the maximum smoothed confidence of column `i` over
    /// grid times in `[clip_start, clip_end)` is at least `threshold`.
    pub fn clip_label(&self, clip_start: f64, clip_end: f64, threshold: f64) -> Result<Vec<u8>, LabelError> {
        let times = &self.table.times;
        let out_of_range = || LabelError::ClipOutOfRange {
            track_id: self.table.track_id.clone(),
            clip_start,
            clip_end,
            first: times[0],
            end: self.table.end_time(),
        };
        if clip_end <= clip_start
            || clip_start < times[0] - TIME_TOLERANCE
            || clip_end > self.table.end_time() + TIME_TOLERANCE
        {
            return Err(out_of_range());
        }
        let lo = times.partition_point(|&t| t < clip_start - TIME_TOLERANCE);
        let hi = times.partition_point(|&t| t < clip_end - TIME_TOLERANCE);
        if lo >= hi {
            return Err(out_of_range());
        }
        Ok(self
            .smoothed
            .iter()
            .map(|s| {
                let peak = s[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                u8::from(peak >= threshold)
            })
            .collect())
    }
}

/// One-shot form of [`SmoothedActivations::clip_label`].
pub fn clip_label(
    table: &ActivationTable,
    clip_start: f64,
    clip_end: f64,
    threshold: f64,
    window_seconds: f64,
) -> Result<Vec<u8>, LabelError> {
    SmoothedActivations::new(table, window_seconds)?.clip_label(clip_start, clip_end, threshold)
}
