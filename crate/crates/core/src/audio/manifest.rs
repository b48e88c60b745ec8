//! Clip manifest: one tab-separated record per clip.
//!
//! ```text
//! # icnn clip manifest v1
//! # classes<TAB>electric bass<TAB>acoustic guitar<TAB>...
//! # track_id<TAB>clip_index<TAB>source_path<TAB>byte_offset<TAB>labels
//! MusicDelta_Beatles<TAB>0<TAB>/data/MusicDelta_Beatles_MIX.wav<TAB>44<TAB>10010100000
//! ```
//!
//! `labels` holds one `0`/`1` character per class, in the order of the
//! `classes` header line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::AudioError;

const HEADER: &str = "# icnn clip manifest v1";
const COLUMNS: &str = "# track_id\tclip_index\tsource_path\tbyte_offset\tlabels";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub track_id: String,
    pub clip_index: usize,
    pub source_path: PathBuf,
    pub byte_offset: u64,
    pub labels: Vec<u8>,
}

impl ManifestEntry {
    pub fn clip_id(&self) -> String {
        format!("{}#{}", self.track_id, self.clip_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str("# classes");
        for c in &self.classes {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        out.push_str(COLUMNS);
        out.push('\n');
        for e in &self.entries {
            let bits: String = e.labels.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.track_id,
                e.clip_index,
                e.source_path.display(),
                e.byte_offset,
                bits
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, AudioError> {
        let mut manifest = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| AudioError::Manifest { line: line_no, reason };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(classes) = rest.trim_start().strip_prefix("classes") {
                    manifest.classes = classes
                        .split('\t')
                        .filter(|s| !s.is_empty())
                        .map(str::to_owned)
                        .collect();
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 tab-separated fields, found {}", fields.len())));
            }
            let clip_index = fields[1]
                .parse()
                .map_err(|_| err(format!("bad clip index {:?}", fields[1])))?;
            let byte_offset = fields[3]
                .parse()
                .map_err(|_| err(format!("bad byte offset {:?}", fields[3])))?;
            let labels = fields[4]
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(err(format!("label character {other:?} is not 0/1"))),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            if labels.len() != manifest.classes.len() {
                return Err(err(format!(
                    "{} label bits for {} classes",
                    labels.len(),
                    manifest.classes.len()
                )));
            }
            manifest.entries.push(ManifestEntry {
                track_id: fields[0].to_owned(),
                clip_index,
                source_path: PathBuf::from(fields[2]),
                byte_offset,
                labels,
            });
        }
        Ok(manifest)
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), AudioError> {
    std::fs::write(path, manifest.to_text()).map_err(|source| AudioError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest, AudioError> {
    let text = std::fs::read_to_string(path).map_err(|source| AudioError::Io {
        path: path.to_owned(),
        source,
    })?;
    Manifest::parse(&text)
}
