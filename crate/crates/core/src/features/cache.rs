//! Feature cache: a binary matrix file plus a clip-id list aligning its rows.
//!
//! ```text
//! "ICFT"     magic
//! u16        format version
//! u32        dims
//! u32        row count
//! f32 data   rows, row-major
//! ```
//!
//! Little-endian throughout. The sidecar `<file>.ids` holds one clip id per
//! line, in row order.

use std::path::{Path, PathBuf};

use super::FeatureError;

pub const FEATURE_MAGIC: &[u8; 4] = b"ICFT";
pub const FEATURE_VERSION: u16 = 1;
const HEADER_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub dims: usize,
    pub clip_ids: Vec<String>,
    pub rows: Vec<Vec<f32>>,
}

impl FeatureCache {
    pub fn new(dims: usize, clip_ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self, FeatureError> {
        if clip_ids.len() != rows.len() {
            return Err(FeatureError::Shape(format!(
                "{} ids for {} rows",
                clip_ids.len(),
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dims) {
            return Err(FeatureError::Shape(format!(
                "row of {} values, expected {dims}",
                r.len()
            )));
        }
        Ok(Self { dims, clip_ids, rows })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.dims * self.rows.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims as u32).to_le_bytes());
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        for v in self.rows.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the matrix file; `clip_ids` come from the sidecar.
    pub fn from_bytes(bytes: &[u8], clip_ids: Vec<String>) -> Result<Self, FeatureError> {
        let bad = |m: String| FeatureError::Cache(m);
        if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
            return Err(bad("not a feature cache file".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FEATURE_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dims = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let expected = dims
            .checked_mul(count)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(HEADER_LEN));
        if expected != Some(bytes.len()) {
            return Err(bad(format!("{} bytes for {count} rows of {dims} values", bytes.len())));
        }
        let values: Vec<f32> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let rows = if dims == 0 {
            vec![Vec::new(); count]
        } else {
            values.chunks_exact(dims).map(<[f32]>::to_vec).collect()
        };
        Self::new(dims, clip_ids, rows)
    }

    pub fn ids_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".ids");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> Result<(), FeatureError> {
        let io = |source| FeatureError::Io {
            path: path.to_owned(),
            source,
        };
        std::fs::write(path, self.to_bytes()).map_err(io)?;
        let ids: String = self.clip_ids.iter().map(|id| format!("{id}\n")).collect();
        std::fs::write(Self::ids_path(path), ids).map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self, FeatureError> {
        let io = |p: &Path| {
            let p = p.to_owned();
            move |source| FeatureError::Io { path: p, source }
        };
        let bytes = std::fs::read(path).map_err(io(path))?;
        let ids_path = Self::ids_path(path);
        let ids = std::fs::read_to_string(&ids_path).map_err(io(&ids_path))?;
        Self::from_bytes(&bytes, ids.lines().map(str::to_owned).collect())
    }

    /// Rows widened to f64.
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }

    /// Errors unless the rows are aligned with `clip_ids`.
    pub fn check_aligned(&self, clip_ids: &[String]) -> Result<(), FeatureError> {
        if self.clip_ids.len() != clip_ids.len() {
            return Err(FeatureError::Cache(format!(
                "cache has {} rows, manifest has {} clips",
                self.clip_ids.len(),
                clip_ids.len()
            )));
        }
        match self.clip_ids.iter().zip(clip_ids).position(|(a, b)| a != b) {
            Some(i) => Err(FeatureError::Cache(format!(
                "row {i} is clip {}, manifest expects {}",
                self.clip_ids[i], clip_ids[i]
            ))),
            None => Ok(()),
        }
    }
}
