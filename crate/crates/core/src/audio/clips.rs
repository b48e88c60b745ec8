use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::manifest::ManifestEntry;
use super::wav::{parse_wav_layout, AudioBuffer, WavLayout};
use super::AudioError;
use crate::{CLIP_SAMPLES, SAMPLE_RATE};

/// One second of mono audio cut from a track.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub track_id: String,
    pub clip_index: usize,
    pub samples: Vec<f32>,
    /// Binary class labels; empty until the labeling stage fills them in.
    pub labels: Vec<u8>,
}

impl ClipRecord {
    pub fn clip_id(&self) -> String {
        format!("{}#{}", self.track_id, self.clip_index)
    }

    /// Start and end of the clip in seconds.
    pub fn interval(&self) -> (f64, f64) {
        clip_interval(self.clip_index)
    }
}

pub(crate) fn clip_interval(clip_index: usize) -> (f64, f64) {
    (clip_index as f64, (clip_index + 1) as f64)
}

/// Cuts a 44.1 kHz track into consecutive non-overlapping one-second clips.
/// The trailing partial second is dropped.
pub fn slice_clips(buffer: &AudioBuffer, track_id: &str) -> Result<Vec<ClipRecord>, AudioError> {
    if buffer.sample_rate != SAMPLE_RATE {
        return Err(AudioError::SampleRate {
            found: buffer.sample_rate,
            expected: SAMPLE_RATE,
        });
    }
    Ok(buffer
        .samples
        .chunks_exact(CLIP_SAMPLES)
        .enumerate()
        .map(|(clip_index, chunk)| ClipRecord {
            track_id: track_id.to_owned(),
            clip_index,
            samples: chunk.to_vec(),
            labels: Vec::new(),
        })
        .collect())
}

/// Loads clip samples straight from the manifest's byte offsets, caching the
/// parsed layout of every source file. Safe to share between threads.
#[derive(Debug, Default)]
pub struct ClipReader {
    layouts: Mutex<HashMap<PathBuf, WavLayout>>,
}

impl ClipReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layout(&self, path: &Path) -> Result<WavLayout, AudioError> {
        if let Some(l) = self.layouts.lock().unwrap().get(path) {
            return Ok(*l);
        }
        let bytes = std::fs::read(path).map_err(|source| AudioError::Io {
            path: path.to_owned(),
            source,
        })?;
        let layout = parse_wav_layout(&bytes).map_err(|source| AudioError::Wav {
            path: path.to_owned(),
            source,
        })?;
        self.layouts.lock().unwrap().insert(path.to_owned(), layout);
        Ok(layout)
    }

    /// Reads the 44100 samples of one manifest entry, checking that the entry
    /// agrees with the file.
    pub fn load(&self, entry: &ManifestEntry) -> Result<Vec<f32>, AudioError> {
        let mismatch = |reason: String| AudioError::ClipMismatch {
            clip_id: entry.clip_id(),
            reason,
        };
        let layout = self.layout(&entry.source_path)?;
        if layout.sample_rate != SAMPLE_RATE {
            return Err(mismatch(format!("source sample rate is {} Hz", layout.sample_rate)));
        }
        let clip_bytes = (CLIP_SAMPLES * layout.block_align) as u64;
        let expected = layout.data_offset + entry.clip_index as u64 * clip_bytes;
        if entry.byte_offset != expected {
            return Err(mismatch(format!(
                "byte offset {} but the file places clip {} at {expected}",
                entry.byte_offset, entry.clip_index
            )));
        }
        if entry.byte_offset + clip_bytes > layout.data_offset + layout.data_len {
            return Err(mismatch(format!(
                "clip extends past the end of the data chunk ({} frames)",
                layout.frames()
            )));
        }
        let io = |source| AudioError::Io {
            path: entry.source_path.clone(),
            source,
        };
        let mut file = File::open(&entry.source_path).map_err(io)?;
        file.seek(SeekFrom::Start(entry.byte_offset)).map_err(io)?;
        let mut raw = vec![0u8; clip_bytes as usize];
        file.read_exact(&mut raw).map_err(io)?;
        Ok(layout.decode_frames(&raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(len: usize) -> AudioBuffer {
        AudioBuffer {
            sample_rate: SAMPLE_RATE,
            samples: (0..len).map(|i| (i % 1000) as f32 / 1000.0).collect(),
        }
    }

    #[test]
    fn floor_of_whole_seconds() {
        assert_eq!(slice_clips(&track(100_000), "t").unwrap().len(), 2);
        assert_eq!(slice_clips(&track(44_100), "t").unwrap().len(), 1);
        assert_eq!(slice_clips(&track(44_099), "t").unwrap().len(), 0);
    }

    #[test]
    fn clips_concatenate_to_prefix() {
        let buf = track(3 * CLIP_SAMPLES + 17);
        let clips = slice_clips(&buf, "song").unwrap();
        let joined: Vec<f32> = clips.iter().flat_map(|c| c.samples.iter().copied()).collect();
        assert_eq!(joined, buf.samples[..3 * CLIP_SAMPLES]);
        assert_eq!(clips[2].clip_index, 2);
        assert_eq!(clips[2].clip_id(), "song#2");
        assert_eq!(clips[2].interval(), (2.0, 3.0));
    }

    #[test]
    fn wrong_rate_is_rejected() {
        let buf = AudioBuffer {
            sample_rate: 48_000,
            samples: vec![0.0; 96_000],
        };
        assert!(matches!(
            slice_clips(&buf, "t"),
            Err(AudioError::SampleRate {
                found: 48_000,
                expected: 44_100
            })
        ));
    }
}
