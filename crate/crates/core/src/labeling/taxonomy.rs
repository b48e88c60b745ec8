//! Instrument taxonomy: raw annotation names -> categories -> final classes.

use std::collections::{BTreeMap, BTreeSet};

use super::LabelError;

/// Catch-all class for categories that occur in too few songs.
pub const OTHER_CLASS: &str = "OTHER";

/// The eleven classes the network predicts, in output order.
pub const CANONICAL_CLASSES: [&str; 11] = [
    "electric bass",
    "acoustic guitar",
    "synthesizer",
    "drum set",
    "fx/processed sound",
    "voice",
    "violin",
    "piano",
    "distorted electric guitar",
    "clean electric guitar",
    OTHER_CLASS,
];

/// Minimum number of songs a category needs to remain its own class.
pub const DEFAULT_MIN_SONGS: usize = 20;

/// Built-in raw-name -> category map for MedleyDB annotations.
pub const DEFAULT_TAXONOMY: &str = include_str!("../../data/medleydb_taxonomy.tsv");

/// Editable taxonomy file contents: the raw -> category map plus any category
/// -> class assignments pinned by hand.
///
/// ```text
/// [raw_to_category]
/// male singer<TAB>voice
/// [category_to_class]
/// tack piano<TAB>piano
/// ```
///
/// Lines before any section header belong to `[raw_to_category]`; `#` starts a
/// comment line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaxonomyMap {
    pub raw_to_category: BTreeMap<String, String>,
    pub category_to_class: BTreeMap<String, String>,
}

impl TaxonomyMap {
    pub fn parse(text: &str) -> Result<Self, LabelError> {
        let mut map = Self::default();
        let mut in_classes = false;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed {
                "[raw_to_category]" => in_classes = false,
                "[category_to_class]" => in_classes = true,
                _ => {
                    let (key, value) = line.split_once('\t').ok_or_else(|| LabelError::Taxonomy {
                        line: i + 1,
                        reason: format!("expected two tab-separated names, got {line:?}"),
                    })?;
                    let (key, value) = (key.trim().to_owned(), value.trim().to_owned());
                    let target = if in_classes {
                        &mut map.category_to_class
                    } else {
                        &mut map.raw_to_category
                    };
                    if let Some(previous) = target.insert(key.clone(), value.clone()) {
                        if previous != value {
                            return Err(LabelError::Taxonomy {
                                line: i + 1,
                                reason: format!("{key:?} mapped to both {previous:?} and {value:?}"),
                            });
                        }
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn default_medleydb() -> Self {
        Self::parse(DEFAULT_TAXONOMY).expect("built-in taxonomy parses")
    }

    /// Category of a raw name; unknown names fall into OTHER.
    pub fn category_of<'a>(&'a self, raw: &str) -> &'a str {
        self.raw_to_category.get(raw).map_or(OTHER_CLASS, String::as_str)
    }
}

/// Resolved taxonomy with its ordered class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    pub raw_to_category: BTreeMap<String, String>,
    pub category_to_class: BTreeMap<String, String>,
    /// Output order: canonical classes first (in canonical order), then any
    /// other kept categories alphabetically, then OTHER.
    pub classes: Vec<String>,
}

fn order_classes<'a>(names: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let set: BTreeSet<&str> = names
        .into_iter()
        .map(String::as_str)
        .filter(|&c| c != OTHER_CLASS)
        .collect();
    let mut classes: Vec<String> = CANONICAL_CLASSES
        .iter()
        .filter(|c| set.contains(*c))
        .map(|c| (*c).to_owned())
        .collect();
    classes.extend(
        set.iter()
            .filter(|c| !CANONICAL_CLASSES.contains(c))
            .map(|c| (*c).to_owned()),
    );
    classes.push(OTHER_CLASS.to_owned());
    classes
}

impl Taxonomy {
    pub fn category_of<'a>(&'a self, raw: &str) -> &'a str {
        self.raw_to_category.get(raw).map_or(OTHER_CLASS, String::as_str)
    }

    pub fn class_of<'a>(&'a self, raw: &str) -> &'a str {
        let category = self.category_of(raw);
        self.category_to_class.get(category).map_or(OTHER_CLASS, String::as_str)
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Serializes both maps fully resolved, in the [`TaxonomyMap`] format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# classes:");
        for c in &self.classes {
            out.push(' ');
            out.push_str(&format!("{c:?}"));
        }
        out.push_str("\n[raw_to_category]\n");
        for (raw, cat) in &self.raw_to_category {
            out.push_str(&format!("{raw}\t{cat}\n"));
        }
        out.push_str("[category_to_class]\n");
        for (cat, class) in &self.category_to_class {
            out.push_str(&format!("{cat}\t{class}\n"));
        }
        out
    }

    /// Builds a taxonomy whose category -> class map is taken entirely from
    /// the file (unmapped categories go to OTHER).
    pub fn from_map(map: &TaxonomyMap) -> Self {
        Self {
            raw_to_category: map.raw_to_category.clone(),
            category_to_class: map.category_to_class.clone(),
            classes: order_classes(map.category_to_class.values()),
        }
    }
}

/// Keeps every category present in at least `min_songs` distinct tracks as its
/// own class and folds the rest into OTHER. `track_instruments` holds the raw
/// instrument names annotated in each track. Categories pinned in
/// `map.category_to_class` keep their pinned class.
pub fn build_taxonomy(map: &TaxonomyMap, track_instruments: &[BTreeSet<String>], min_songs: usize) -> Taxonomy {
    let mut songs_per_category: BTreeMap<&str, usize> = BTreeMap::new();
    for track in track_instruments {
        let categories: BTreeSet<&str> = track.iter().map(|raw| map.category_of(raw)).collect();
        for c in categories {
            *songs_per_category.entry(c).or_default() += 1;
        }
    }
    let mut category_to_class = BTreeMap::new();
    let all_categories: BTreeSet<&str> = map
        .raw_to_category
        .values()
        .map(String::as_str)
        .chain(songs_per_category.keys().copied())
        .chain(map.category_to_class.keys().map(String::as_str))
        .collect();
    for category in all_categories {
        let class = if let Some(pinned) = map.category_to_class.get(category) {
            pinned.clone()
        } else if category != OTHER_CLASS && songs_per_category.get(category).copied().unwrap_or(0) >= min_songs {
            category.to_owned()
        } else {
            OTHER_CLASS.to_owned()
        };
        category_to_class.insert(category.to_owned(), class);
    }
    let classes = order_classes(category_to_class.values());
    Taxonomy {
        raw_to_category: map.raw_to_category.clone(),
        category_to_class,
        classes,
    }
}

/// ORs raw-instrument bits (aligned with `columns`) into class bits.
pub fn collapse_labels(raw_bits: &[u8], columns: &[String], taxonomy: &Taxonomy) -> Result<Vec<u8>, LabelError> {
    if raw_bits.len() != columns.len() {
        return Err(LabelError::Shape(format!(
            "{} raw label bits for {} columns",
            raw_bits.len(),
            columns.len()
        )));
    }
    let mut out = vec![0u8; taxonomy.num_classes()];
    for (&bit, raw) in raw_bits.iter().zip(columns) {
        if bit > 1 {
            return Err(LabelError::Shape(format!("raw label {bit} for {raw:?} is not binary")));
        }
        if bit == 1 {
            let class = taxonomy.class_of(raw);
            let idx = taxonomy
                .class_index(class)
                .ok_or_else(|| LabelError::Shape(format!("class {class:?} missing from class list")))?;
            out[idx] = 1;
        }
    }
    Ok(out)
}
