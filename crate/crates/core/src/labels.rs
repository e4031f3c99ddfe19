//! Label taxonomy, label CSV ingestion and severity weights.
//!
//! The tag vocabulary is data: [`Taxonomy::builtin`] carries the
//! India-adapted schema, and any city can ship its own JSON file with the
//! same layout.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::road_graph::EdgeId;
use crate::{Error, Result};

const BUILTIN_TAXONOMY: &str = include_str!("../data/label_taxonomy.json");

pub const LABEL_CSV_HEADER: [&str; 8] = [
    "label_id",
    "segment_id",
    "label_type",
    "severity",
    "tags",
    "lat",
    "lon",
    "pano_id",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    CurbStyle,
    MissingCurbRamp,
    ObstacleInPath,
    SurfaceProblem,
    NoSidewalk,
    Crosswalk,
    PedestrianSignal,
}

impl LabelKind {
    pub const ALL: [LabelKind; 7] = [
        LabelKind::CurbStyle,
        LabelKind::MissingCurbRamp,
        LabelKind::ObstacleInPath,
        LabelKind::SurfaceProblem,
        LabelKind::NoSidewalk,
        LabelKind::Crosswalk,
        LabelKind::PedestrianSignal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LabelKind::CurbStyle => "CurbStyle",
            LabelKind::MissingCurbRamp => "MissingCurbRamp",
            LabelKind::ObstacleInPath => "ObstacleInPath",
            LabelKind::SurfaceProblem => "SurfaceProblem",
            LabelKind::NoSidewalk => "NoSidewalk",
            LabelKind::Crosswalk => "Crosswalk",
            LabelKind::PedestrianSignal => "PedestrianSignal",
        }
    }

    /// Whether the feature helps (curbs, crossings, signals) or hinders
    /// pedestrians. Taxonomy files must agree with this.
    pub fn polarity(&self) -> Polarity {
        match self {
            LabelKind::CurbStyle | LabelKind::Crosswalk | LabelKind::PedestrianSignal => Polarity::Positive,
            _ => Polarity::Negative,
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn squash(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Annotation severity on the 1 (minor) to 3 (impassable) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Severity(u8);

impl Severity {
    pub fn new(level: u8) -> Result<Self> {
        if (1..=3).contains(&level) {
            Ok(Severity(level))
        } else {
            Err(Error::invalid(format!("severity must be 1, 2 or 3, got {level}")))
        }
    }

    pub fn level(&self) -> u8 {
        self.0
    }

    pub fn weight(&self) -> f64 {
        match self.0 {
            1 => 0.2,
            2 => 0.6,
            _ => 1.0,
        }
    }
}

impl TryFrom<u8> for Severity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Severity::new(v)
    }
}

impl From<Severity> for u8 {
    fn from(s: Severity) -> u8 {
        s.0
    }
}

/// Weight of a severity rating: 1 → 0.2, 2 → 0.6, 3 → 1.0.
pub fn severity_weight(severity: i64) -> Result<f64> {
    let level =
        u8::try_from(severity).map_err(|_| Error::invalid(format!("severity must be 1, 2 or 3, got {severity}")))?;
    Ok(Severity::new(level)?.weight())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelType {
    pub name: LabelKind,
    pub display_name: String,
    pub polarity: Polarity,
    #[serde(rename = "tags")]
    pub allowed_tags: BTreeSet<String>,
    #[serde(default)]
    pub removed_tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedLabel {
    pub name: String,
    pub replaced_by: Option<LabelKind>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: String,
    #[serde(default)]
    pub removed_labels: Vec<RemovedLabel>,
    pub label_types: Vec<LabelType>,
}

// Mirrors the file layout with tag lists kept as vectors so duplicates are
// detectable before they collapse into sets.
#[derive(Deserialize)]
struct RawTaxonomy {
    version: String,
    #[serde(default)]
    removed_labels: Vec<RemovedLabel>,
    label_types: Vec<RawLabelType>,
}

#[derive(Deserialize)]
struct RawLabelType {
    name: LabelKind,
    display_name: String,
    polarity: Polarity,
    tags: Vec<String>,
    #[serde(default)]
    removed_tags: Vec<String>,
}

impl Taxonomy {
    pub fn builtin() -> Taxonomy {
        load_taxonomy(BUILTIN_TAXONOMY).expect("bundled label taxonomy is valid")
    }

    pub fn get(&self, kind: LabelKind) -> &LabelType {
        self.label_types
            .iter()
            .find(|t| t.name == kind)
            .expect("validated taxonomy holds every label kind")
    }

    /// Finds a label type by identifier or display name, ignoring case,
    /// spaces and punctuation. Removed labels are not found.
    pub fn lookup(&self, name: &str) -> Option<&LabelType> {
        let key = squash(name);
        self.label_types
            .iter()
            .find(|t| squash(t.name.as_str()) == key || squash(&t.display_name) == key)
    }

    fn removed_label(&self, name: &str) -> Option<&RemovedLabel> {
        let key = squash(name);
        self.removed_labels.iter().find(|r| squash(&r.name) == key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a label taxonomy document.
pub fn load_taxonomy(text: &str) -> Result<Taxonomy> {
    let raw: RawTaxonomy = serde_json::from_str(text).map_err(|e| Error::schema("label taxonomy", e.to_string()))?;
    let mut seen = BTreeSet::new();
    let mut types = Vec::with_capacity(raw.label_types.len());
    for t in raw.label_types {
        if !seen.insert(t.name) {
            return Err(Error::schema(
                "label taxonomy",
                format!("label type {} listed twice", t.name),
            ));
        }
        if t.polarity != t.name.polarity() {
            return Err(Error::schema(
                "label taxonomy",
                format!(
                    "label type {} has polarity {:?}, expected {:?}",
                    t.name,
                    t.polarity,
                    t.name.polarity()
                ),
            ));
        }
        let mut tags = BTreeSet::new();
        for tag in &t.tags {
            if !tags.insert(tag.clone()) {
                return Err(Error::schema(
                    "label taxonomy",
                    format!("duplicate tag {tag:?} in {}", t.name),
                ));
            }
            if tag.contains(';') {
                return Err(Error::schema("label taxonomy", format!("tag {tag:?} contains ';'")));
            }
        }
        let removed: BTreeSet<String> = t.removed_tags.into_iter().collect();
        types.push(LabelType {
            name: t.name,
            display_name: t.display_name,
            polarity: t.polarity,
            allowed_tags: tags,
            removed_tags: removed,
        });
    }
    if let Some(missing) = LabelKind::ALL.iter().find(|k| !seen.contains(k)) {
        return Err(Error::schema("label taxonomy", format!("label type {missing} missing")));
    }
    Ok(Taxonomy {
        version: raw.version,
        removed_labels: raw.removed_labels,
        label_types: types,
    })
}

/// One accessibility annotation attached to a road segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub label_id: String,
    pub segment_id: EdgeId,
    pub label_type: LabelKind,
    pub severity: Severity,
    pub tags: BTreeSet<String>,
    pub location: GeoPoint,
    pub pano_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowRejection {
    /// 1-based line in the source document.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLabels {
    pub labels: Vec<SegmentLabel>,
    pub rejected: Vec<RowRejection>,
}

/// Reads a label CSV, validating each row against `taxonomy`.
///
/// Invalid rows are collected in [`ParsedLabels::rejected`] with their line
/// number; a document with no valid rows is an error.
pub fn parse_labels(text: &str, taxonomy: &Taxonomy) -> Result<ParsedLabels> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != LABEL_CSV_HEADER {
        return Err(Error::schema(
            "line 1",
            format!(
                "expected header {}, got {}",
                LABEL_CSV_HEADER.join(","),
                header.join(",")
            ),
        ));
    }

    let mut out = ParsedLabels::default();
    let mut ids = BTreeSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, taxonomy) {
            Ok(label) if !ids.insert(label.label_id.clone()) => out.rejected.push(RowRejection {
                line,
                message: format!("duplicate label_id {}", label.label_id),
            }),
            Ok(label) => out.labels.push(label),
            Err(message) => out.rejected.push(RowRejection { line, message }),
        }
    }
    if out.labels.is_empty() {
        let detail = out
            .rejected
            .first()
            .map(|r| format!("no valid label rows (first rejection: {r})"))
            .unwrap_or_else(|| "no label rows".to_string());
        let location = out
            .rejected
            .first()
            .map(|r| format!("line {}", r.line))
            .unwrap_or_else(|| "labels".into());
        return Err(Error::schema(location, detail));
    }
    Ok(out)
}

fn parse_row(record: &csv::StringRecord, taxonomy: &Taxonomy) -> std::result::Result<SegmentLabel, String> {
    if record.len() != LABEL_CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            LABEL_CSV_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("");

    let label_id = field(0).to_string();
    if label_id.is_empty() {
        return Err("empty label_id".into());
    }
    let segment_id: EdgeId = field(1)
        .parse()
        .map_err(|_| format!("segment_id {:?} is not a non-negative integer", field(1)))?;

    let type_name = field(2);
    let label_type = match taxonomy.lookup(type_name) {
        Some(t) => t,
        None => {
            return Err(match taxonomy.removed_label(type_name) {
                Some(r) => format!(
                    "label type {type_name:?} was removed{}",
                    r.replaced_by.map(|k| format!(" (use {k})")).unwrap_or_default()
                ),
                None => format!("unknown label type {type_name:?}"),
            })
        }
    };

    let severity = field(3)
        .parse::<u8>()
        .ok()
        .and_then(|s| Severity::new(s).ok())
        .ok_or_else(|| format!("severity {:?} outside 1-3", field(3)))?;

    let mut tags = BTreeSet::new();
    for tag in field(4).split(';').map(str::trim).filter(|t| !t.is_empty()) {
        if !label_type.allowed_tags.contains(tag) {
            return Err(if label_type.removed_tags.contains(tag) {
                format!("tag {tag:?} was removed from {}", label_type.display_name)
            } else {
                format!("tag {tag:?} is not allowed for {}", label_type.display_name)
            });
        }
        tags.insert(tag.to_string());
    }

    let lat: f64 = field(5)
        .parse()
        .map_err(|_| format!("lat {:?} is not a number", field(5)))?;
    let lon: f64 = field(6)
        .parse()
        .map_err(|_| format!("lon {:?} is not a number", field(6)))?;
    let location = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;

    Ok(SegmentLabel {
        label_id,
        segment_id,
        label_type: label_type.name,
        severity,
        tags,
        location,
        pano_id: field(7).to_string(),
    })
}
