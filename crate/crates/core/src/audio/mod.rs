//! WAV decoding, one-second clip slicing and the clip manifest.

mod clips;
mod manifest;
mod wav;

pub use clips::{slice_clips, ClipReader, ClipRecord};
pub use manifest::{read_manifest, write_manifest, Manifest, ManifestEntry};
pub use wav::{
    decode_wav, encode_wav_pcm16, parse_wav_layout, to_pcm16, AudioBuffer, SampleFormat, WavError, WavLayout,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: WavError,
    },
    #[error(transparent)]
    WavBytes(#[from] WavError),
    #[error("sample rate {found} Hz, expected {expected} Hz (resampling is not supported)")]
    SampleRate { found: u32, expected: u32 },
    #[error("clip {clip_id}: {reason}")]
    ClipMismatch { clip_id: String, reason: String },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
