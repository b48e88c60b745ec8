//! Synthetic corpora: mixes of gated sinusoids with matching activation
//! confidence files, and in-memory labelled clips.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::InMemoryClips;
use super::{write_file, Result};
use crate::audio::{encode_wav_pcm16, to_pcm16};
use crate::SAMPLE_RATE;

/// Raw instrument names used by the generator with their tone frequencies in
/// Hz. The first ten map to the ten named classes under the built-in
/// taxonomy; the last two map to OTHER.
pub const SYNTHETIC_INSTRUMENTS: [(&str, f64); 12] = [
    ("electric bass", 82.4),
    ("acoustic guitar", 196.0),
    ("synthesizer", 523.3),
    ("drum set", 140.0),
    ("fx/processed sound", 1500.0),
    ("male singer", 330.0),
    ("violin", 659.3),
    ("piano", 261.6),
    ("distorted electric guitar", 392.0),
    ("clean electric guitar", 293.7),
    ("banjo", 880.0),
    ("flute", 1174.7),
];

/// Instruments from this index on are rare: each occurs in exactly one track.
pub const SYNTHETIC_RARE_FROM: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub tracks: usize,
    pub seed: u64,
    /// Track durations are drawn uniformly from this range, in seconds.
    pub min_seconds: f64,
    pub max_seconds: f64,
    /// Annotation time step in seconds.
    pub step: f64,
    /// Number of tracks (taken from the end) whose confidences are all zero.
    pub silent_tracks: usize,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            tracks: 10,
            seed: 0,
            min_seconds: 2.2,
            max_seconds: 4.8,
            step: 2048.0 / SAMPLE_RATE as f64,
            silent_tracks: 0,
        }
    }
}

/// What the generator wrote for one track.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrack {
    pub id: String,
    pub samples: usize,
    pub instruments: Vec<String>,
}

/// Writes `audio/<id>_MIX.wav` (16-bit mono, 44.1 kHz) and
/// `activations/<id>_ACTIVATION_CONF.csv` for every track under `dir`.
/// Each common instrument is present with probability 1/2 (plus one forced
/// per track), each rare one in a single track. A present instrument sounds as
/// a sinusoid during one random interval; its confidence is high inside the
/// interval and low outside.
pub fn make_synthetic_corpus(dir: &Path, opts: &SyntheticOptions) -> Result<Vec<SyntheticTrack>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.tracks);
    for t in 0..opts.tracks {
        let id = format!("Synth_{t:03}");
        let seconds = rng.gen_range(opts.min_seconds..=opts.max_seconds);
        let samples = (seconds * SAMPLE_RATE as f64).floor() as usize;
        let silent = t >= opts.tracks.saturating_sub(opts.silent_tracks);
        // common instrument t % 10 is always present; rare instrument r only
        // in track r - SYNTHETIC_RARE_FROM
        let present: Vec<usize> = (0..SYNTHETIC_INSTRUMENTS.len())
            .filter(|&i| {
                if i >= SYNTHETIC_RARE_FROM {
                    t == i - SYNTHETIC_RARE_FROM
                } else {
                    i == t % SYNTHETIC_RARE_FROM || rng.gen_bool(0.5)
                }
            })
            .collect();
        let intervals: Vec<(f64, f64)> = present
            .iter()
            .map(|_| {
                let a = rng.gen_range(0.0..seconds * 0.6);
                let b = rng.gen_range((a + 0.4).min(seconds)..=seconds);
                (a, b)
            })
            .collect();

        let mut audio = vec![0.0f64; samples];
        for (&inst, &(a, b)) in present.iter().zip(&intervals) {
            if silent {
                continue;
            }
            let freq = SYNTHETIC_INSTRUMENTS[inst].1;
            let phase = rng.gen_range(0.0..2.0 * PI);
            let lo = (a * SAMPLE_RATE as f64) as usize;
            let hi = ((b * SAMPLE_RATE as f64) as usize).min(samples);
            for (n, s) in audio.iter_mut().enumerate().take(hi).skip(lo) {
                *s += 0.15 * (2.0 * PI * freq * n as f64 / SAMPLE_RATE as f64 + phase).sin();
            }
        }
        for s in audio.iter_mut() {
            *s += rng.gen_range(-0.01..0.01);
        }
        let pcm = to_pcm16(&audio.iter().map(|&s| s as f32).collect::<Vec<_>>());
        write_file(
            &dir.join("audio").join(format!("{id}_MIX.wav")),
            encode_wav_pcm16(SAMPLE_RATE, 1, &pcm),
        )?;

        let steps = (seconds / opts.step).ceil() as usize + 1;
        let mut csv = String::from("time");
        for &inst in &present {
            csv.push(',');
            csv.push_str(SYNTHETIC_INSTRUMENTS[inst].0);
        }
        csv.push('\n');
        for k in 0..steps {
            let time = k as f64 * opts.step;
            let _ = write!(csv, "{time}");
            for &(a, b) in &intervals {
                let active = !silent && time >= a && time < b;
                let conf: f64 = if silent {
                    0.0
                } else if active {
                    rng.gen_range(0.8..1.0)
                } else {
                    rng.gen_range(0.0..0.2)
                };
                let _ = write!(csv, ",{conf:.4}");
            }
            csv.push('\n');
        }
        write_file(&dir.join("activations").join(format!("{id}_ACTIVATION_CONF.csv")), csv)?;
        out.push(SyntheticTrack {
            id,
            samples,
            instruments: present.iter().map(|&i| SYNTHETIC_INSTRUMENTS[i].0.to_owned()).collect(),
        });
    }
    Ok(out)
}

/// `count` clips of `length` samples, each a mix of the sinusoids of its
/// active labels (label `c` sounds at `110 * 1.5^c` Hz folded into the audio
/// band) plus light noise. Label vectors are distinct and non-empty when
/// `2^num_labels > count`.
pub fn sinusoid_clips(count: usize, num_labels: usize, length: usize, seed: u64) -> InMemoryClips {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<f64> = (0..num_labels)
        .map(|c| {
            let mut f = 110.0 * 1.5f64.powi(c as i32);
            while f > 8000.0 {
                f /= 4.0;
            }
            f
        })
        .collect();
    let mut clips = InMemoryClips::default();
    while clips.labels.len() < count {
        let labels: Vec<u8> = (0..num_labels).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        let distinct = !clips.labels.contains(&labels);
        let enough_room = num_labels >= 64 || (1u64 << num_labels) > count as u64;
        if enough_room && (!distinct || labels.iter().all(|&b| b == 0)) {
            continue;
        }
        let phases: Vec<f64> = (0..num_labels).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let samples: Vec<f32> = (0..length)
            .map(|n| {
                let t = n as f64 / SAMPLE_RATE as f64;
                let tone: f64 = (0..num_labels)
                    .filter(|&c| labels[c] == 1)
                    .map(|c| (2.0 * PI * freqs[c] * t + phases[c]).sin())
                    .sum();
                (0.2 * tone + rng.gen_range(-0.02..0.02)) as f32
            })
            .collect();
        clips.ids.push(format!("synthetic#{}", clips.ids.len()));
        clips.samples.push(samples);
        clips.labels.push(labels);
    }
    clips
}
