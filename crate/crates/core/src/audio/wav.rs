//! RIFF/WAVE decoding for PCM (16/24/32-bit integer) and 32-bit float data.

use thiserror::Error;

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WavError {
    #[error("not a RIFF file (found {0:?})")]
    NotRiff([u8; 4]),
    #[error("RIFF form type is {0:?}, expected \"WAVE\"")]
    NotWave([u8; 4]),
    #[error("chunk {id:?} at byte {offset} declares {declared} bytes but only {available} remain")]
    TruncatedChunk {
        id: String,
        offset: u64,
        declared: u64,
        available: u64,
    },
    #[error("truncated chunk header at byte {0}")]
    TruncatedHeader(u64),
    #[error("missing {0:?} chunk")]
    MissingChunk(&'static str),
    #[error("fmt chunk is {0} bytes, need at least 16")]
    ShortFmt(u32),
    #[error("unsupported codec: format tag {tag:#06x} with {bits} bits per sample")]
    UnsupportedFormat { tag: u16, bits: u16 },
    #[error("unsupported channel count {0} (mono or stereo only)")]
    UnsupportedChannels(u16),
    #[error("block align {block_align} inconsistent with {channels} channels of {bits} bits")]
    BadBlockAlign { block_align: u16, channels: u16, bits: u16 },
    #[error("sample rate is 0")]
    ZeroSampleRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int16,
    Int24,
    Int32,
    Float32,
}

impl SampleFormat {
    pub fn bytes(self) -> usize {
        match self {
            Self::Int16 => 2,
            Self::Int24 => 3,
            Self::Int32 | Self::Float32 => 4,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::Int16 => f64::from(i16::from_le_bytes([b[0], b[1]])) / 32768.0,
            Self::Int24 => {
                let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
                f64::from(v) / 8_388_608.0
            }
            Self::Int32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])) / 2_147_483_648.0,
            Self::Float32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        }
    }
}

/// Where the sample data lives in a WAV file and how it is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavLayout {
    pub sample_rate: u32,
    pub channels: u16,
    pub format: SampleFormat,
    /// Bytes per frame (all channels).
    pub block_align: usize,
    /// Byte offset of the first sample in the file.
    pub data_offset: u64,
    /// Length of the data chunk in bytes.
    pub data_len: u64,
}

impl WavLayout {
    pub fn frames(&self) -> usize {
        (self.data_len / self.block_align as u64) as usize
    }

    /// Decodes whole frames from raw data bytes, downmixing to mono by the
    /// arithmetic mean of the channels.
    pub fn decode_frames(&self, data: &[u8]) -> Vec<f32> {
        let width = self.format.bytes();
        let channels = usize::from(self.channels);
        data.chunks_exact(self.block_align)
            .map(|frame| {
                let sum: f64 = (0..channels)
                    .map(|c| self.format.decode(&frame[c * width..(c + 1) * width]))
                    .sum();
                (sum / channels as f64) as f32
            })
            .collect()
    }
}

/// Decoded mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

fn fourcc(b: &[u8]) -> [u8; 4] {
    [b[0], b[1], b[2], b[3]]
}

/// Walks the chunk list and returns the sample layout. Every chunk must fit in
/// the file; a missing pad byte after the final chunk is tolerated.
pub fn parse_wav_layout(bytes: &[u8]) -> Result<WavLayout, WavError> {
    if bytes.len() < 12 {
        return Err(WavError::TruncatedHeader(0));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(WavError::NotRiff(fourcc(&bytes[0..4])));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave(fourcc(&bytes[8..12])));
    }

    let mut fmt: Option<(u16, u16, u32, u16, u16)> = None;
    let mut data: Option<(u64, u64)> = None;
    let mut pos = 12usize;
    while pos < bytes.len() {
        if bytes.len() - pos < 8 {
            // a lone pad byte at the very end is fine
            if bytes.len() - pos == 1 {
                break;
            }
            return Err(WavError::TruncatedHeader(pos as u64));
        }
        let id = fourcc(&bytes[pos..pos + 4]);
        let size = u32::from_le_bytes(fourcc(&bytes[pos + 4..pos + 8]));
        let body = pos + 8;
        let available = (bytes.len() - body) as u64;
        if u64::from(size) > available {
            return Err(WavError::TruncatedChunk {
                id: String::from_utf8_lossy(&id).into_owned(),
                offset: pos as u64,
                declared: u64::from(size),
                available,
            });
        }
        let chunk = &bytes[body..body + size as usize];
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::ShortFmt(size));
                }
                let u16_at = |o: usize| u16::from_le_bytes([chunk[o], chunk[o + 1]]);
                let mut tag = u16_at(0);
                if tag == FORMAT_EXTENSIBLE && size >= 26 {
                    // sub-format GUID starts at offset 24; its first two bytes carry the tag
                    tag = u16_at(24);
                }
                let rate = u32::from_le_bytes(fourcc(&chunk[4..8]));
                fmt = Some((tag, u16_at(2), rate, u16_at(12), u16_at(14)));
            }
            b"data" => data = Some((body as u64, u64::from(size))),
            _ => {}
        }
        pos = body + size as usize + (size as usize & 1);
    }

    let (tag, channels, sample_rate, block_align, bits) = fmt.ok_or(WavError::MissingChunk("fmt "))?;
    let (data_offset, data_len) = data.ok_or(WavError::MissingChunk("data"))?;
    let format = match (tag, bits) {
        (FORMAT_PCM, 16) => SampleFormat::Int16,
        (FORMAT_PCM, 24) => SampleFormat::Int24,
        (FORMAT_PCM, 32) => SampleFormat::Int32,
        (FORMAT_FLOAT, 32) => SampleFormat::Float32,
        (tag, bits) => return Err(WavError::UnsupportedFormat { tag, bits }),
    };
    if !(1..=2).contains(&channels) {
        return Err(WavError::UnsupportedChannels(channels));
    }
    if usize::from(block_align) != usize::from(channels) * format.bytes() {
        return Err(WavError::BadBlockAlign {
            block_align,
            channels,
            bits,
        });
    }
    if sample_rate == 0 {
        return Err(WavError::ZeroSampleRate);
    }
    Ok(WavLayout {
        sample_rate,
        channels,
        format,
        block_align: usize::from(block_align),
        data_offset,
        data_len,
    })
}

/// Integer samples are scaled by `1 / 2^(bits - 1)`; stereo is averaged to mono.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    let layout = parse_wav_layout(bytes)?;
    let start = layout.data_offset as usize;
    let samples = layout.decode_frames(&bytes[start..start + layout.data_len as usize]);
    Ok(AudioBuffer {
        sample_rate: layout.sample_rate,
        samples,
    })
}

/// Minimal 16-bit PCM writer (interleaved samples), used to build synthetic
/// corpora.
pub fn encode_wav_pcm16(sample_rate: u32, channels: u16, interleaved: &[i16]) -> Vec<u8> {
    let data_len = (interleaved.len() * 2) as u32;
    let block_align = channels * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in interleaved {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Quantizes `[-1, 1]` samples to 16-bit PCM (clamped, rounded).
pub fn to_pcm16(samples: &[f32]) -> Vec<i16> {
    samples
        .iter()
        .map(|&s| (f64::from(s) * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect()
}
