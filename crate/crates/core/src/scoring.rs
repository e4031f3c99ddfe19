//! Segment, POI and category accessibility scores.
//!
//! Raw segment scores are signed sums of label contributions. The corpus of
//! raw scores is then winsorized on the negative tail, standardized and
//! passed through a logistic so every segment lands in (0, 1) with 0 the
//! least accessible. POI scores are length-weighted means of segment scores
//! and category scores are POI-count-weighted means of POI scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_distance, GeoPoint, ZonePolygon};
use crate::labels::{LabelKind, Polarity, SegmentLabel, Severity};
use crate::poi_pipeline::PoiCategory;
use crate::road_graph::{collection, feature, EdgeId, RoadNetwork};
use crate::{Error, Result};

/// Upper quantile of negative-score magnitudes used as the clipping bound.
pub const CLIP_QUANTILE: f64 = 0.95;
pub const DEFAULT_FINDINGS_SEVERITY: u8 = 2;

/// Positive labels score `POSITIVE_CEILING - weight`, so a severity 1
/// crosswalk adds 1.0 and a severity 3 one adds 0.2.
const POSITIVE_CEILING: f64 = 1.2;

/// Signed contribution of one label to its segment's raw score.
pub fn feature_contribution(label: &SegmentLabel) -> f64 {
    contribution(label.label_type, label.severity)
}

fn contribution(kind: LabelKind, severity: Severity) -> f64 {
    match kind.polarity() {
        Polarity::Negative => -severity.weight(),
        Polarity::Positive => POSITIVE_CEILING - severity.weight(),
    }
}

/// Per-type accumulated contributions for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub segment_id: EdgeId,
    pub entries: BTreeMap<LabelKind, f64>,
}

impl FeatureVector {
    pub fn from_labels(segment_id: EdgeId, labels: &[SegmentLabel]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for l in labels {
            if l.segment_id != segment_id {
                return Err(Error::invalid(format!(
                    "label {} belongs to segment {}, not {segment_id}",
                    l.label_id, l.segment_id
                )));
            }
            *entries.entry(l.label_type).or_insert(0.0) += feature_contribution(l);
        }
        Ok(FeatureVector { segment_id, entries })
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }
}

/// Sum of contributions of labels that all sit on one segment. No labels
/// score 0.
pub fn raw_segment_score(labels: &[SegmentLabel]) -> Result<f64> {
    let Some(first) = labels.first() else {
        return Ok(0.0);
    };
    if let Some(other) = labels.iter().find(|l| l.segment_id != first.segment_id) {
        return Err(Error::invalid(format!(
            "labels span segments {} and {}",
            first.segment_id, other.segment_id
        )));
    }
    Ok(labels.iter().map(feature_contribution).sum())
}

/// Raw scores for every segment in `corpus`; labels on other segments are
/// ignored.
pub fn raw_scores(labels: &[SegmentLabel], corpus: &BTreeSet<EdgeId>) -> BTreeMap<EdgeId, f64> {
    let mut out: BTreeMap<EdgeId, f64> = corpus.iter().map(|id| (*id, 0.0)).collect();
    for l in labels {
        if let Some(score) = out.get_mut(&l.segment_id) {
            *score += feature_contribution(l);
        }
    }
    out
}

/// Quantile `q` of ascending `sorted` values, interpolating linearly between
/// order statistics at rank `q * (n - 1)`.
pub fn quantile_linear(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn logistic(z: f64) -> f64 {
    // Keep the open interval even where the exponential saturates.
    (1.0 / (1.0 + (-z).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Clips, standardizes and squashes a corpus of raw scores, preserving order.
pub fn normalize_values(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid("cannot normalize an empty score corpus"));
    }
    if let Some(bad) = raw.iter().find(|r| !r.is_finite()) {
        return Err(Error::invalid(format!("raw score {bad} is not finite")));
    }
    let mut magnitudes: Vec<f64> = raw.iter().filter(|r| **r < 0.0).map(|r| -r).collect();
    magnitudes.sort_by(f64::total_cmp);
    let clipped: Vec<f64> = match quantile_linear(&magnitudes, CLIP_QUANTILE) {
        Some(t) => raw.iter().map(|r| r.max(-t)).collect(),
        None => raw.to_vec(),
    };

    let n = clipped.len() as f64;
    let (lo, hi) = clipped.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    });
    if lo == hi {
        return Ok(vec![0.5; clipped.len()]);
    }
    let mean = clipped.iter().sum::<f64>() / n;
    let sd = (clipped.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(clipped.iter().map(|v| logistic((v - mean) / sd)).collect())
}

pub fn normalize_scores(raw: &BTreeMap<EdgeId, f64>) -> Result<BTreeMap<EdgeId, f64>> {
    let values: Vec<f64> = raw.values().copied().collect();
    let normalized = normalize_values(&values)?;
    Ok(raw.keys().copied().zip(normalized).collect())
}

fn weighted_mean(items: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (v, w) in items {
        if w > 0.0 {
            num += v * w;
            den += w;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    // Rounding must not push a convex combination outside its inputs.
    (den > 0.0).then(|| (num / den).clamp(lo, hi))
}

/// Length-weighted mean of `(segment score, length in meters)` pairs.
pub fn poi_sec_score(segments: &[(f64, f64)]) -> Result<f64> {
    if segments.is_empty() {
        return Err(Error::invalid("POI has no scored segments"));
    }
    for (score, length) in segments {
        if !score.is_finite() {
            return Err(Error::invalid(format!("segment score {score} is not finite")));
        }
        if !(length.is_finite() && *length > 0.0) {
            return Err(Error::invalid(format!("segment length must be positive, got {length}")));
        }
    }
    weighted_mean(segments.iter().copied()).ok_or_else(|| Error::invalid("total segment length is zero"))
}

/// POI-count-weighted mean of `(POI score, POI count)` groups. `None` is
/// the no-data marker for a category without POIs.
pub fn poi_across_sector_score(groups: &[(f64, u64)]) -> Option<f64> {
    weighted_mean(groups.iter().map(|(s, n)| (*s, *n as f64)))
}

/// Candidate segments for one POI with the sector it was assigned to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiSegments {
    pub poi_id: String,
    pub category: PoiCategory,
    pub sector_id: Option<String>,
    /// `(segment, length in meters)`.
    pub segments: Vec<(EdgeId, f64)>,
}

/// Keeps the edges whose midpoint lies in `sector` (all of them when the POI
/// has no sector), paired with their lengths.
pub fn select_segments(
    net: &RoadNetwork,
    candidates: impl IntoIterator<Item = EdgeId>,
    sector: Option<&ZonePolygon>,
) -> Result<Vec<(EdgeId, f64)>> {
    let mut out = Vec::new();
    for id in candidates {
        let edge = net.edge(id).ok_or_else(|| Error::NotFound(format!("segment {id}")))?;
        if sector.is_none_or(|s| s.contains(&edge.geometry.midpoint())) {
            out.push((id, edge.length_m));
        }
    }
    Ok(out)
}

/// Edges whose midpoint lies within `radius_m` of `poi` in a straight line.
pub fn segments_within_buffer(net: &RoadNetwork, poi: &GeoPoint, radius_m: f64) -> Vec<EdgeId> {
    net.edges()
        .iter()
        .filter(|e| haversine_distance(poi, &e.geometry.midpoint()) <= radius_m)
        .map(|e| e.id)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub raw: f64,
    pub seg: f64,
    pub length_m: f64,
    pub sector_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiScore {
    pub score: f64,
    pub category: PoiCategory,
    pub sector_id: Option<String>,
    pub total_length_m: f64,
    pub segment_count: usize,
}

/// Mean POI score of one category inside one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub sector_id: Option<String>,
    pub category: PoiCategory,
    pub score: f64,
    pub poi_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    /// `None` when no POI of the category was scored.
    pub score: Option<f64>,
    pub poi_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub segments: BTreeMap<EdgeId, SegmentScore>,
    pub pois: BTreeMap<String, PoiScore>,
    /// POIs without any retained segment.
    pub unscored_pois: Vec<String>,
    pub sector_categories: Vec<CellScore>,
    pub across_sector: BTreeMap<PoiCategory, CategoryScore>,
}

/// Scores every segment referenced by `pois`, then the POIs, then the
/// categories. Uncategorized POIs get a score but join no category.
pub fn compute_scores(labels: &[SegmentLabel], pois: &[PoiSegments]) -> Result<ScoreSet> {
    let mut lengths: BTreeMap<EdgeId, (f64, Option<String>)> = BTreeMap::new();
    for p in pois {
        for (id, len) in &p.segments {
            let entry = lengths.entry(*id).or_insert((*len, None));
            if entry.1.is_none() {
                entry.1 = p.sector_id.clone();
            }
        }
    }
    if lengths.is_empty() {
        return Err(Error::invalid("no segments to score"));
    }
    let corpus: BTreeSet<EdgeId> = lengths.keys().copied().collect();
    let stray = labels.iter().filter(|l| !corpus.contains(&l.segment_id)).count();
    if stray > 0 {
        log::warn!("{stray} labels sit on segments outside the scored set and were ignored");
    }
    let raw = raw_scores(labels, &corpus);
    let seg = normalize_scores(&raw)?;
    let segments: BTreeMap<EdgeId, SegmentScore> = raw
        .iter()
        .map(|(id, r)| {
            let (length_m, sector_id) = lengths[id].clone();
            (
                *id,
                SegmentScore {
                    raw: *r,
                    seg: seg[id],
                    length_m,
                    sector_id,
                },
            )
        })
        .collect();

    let mut scored = BTreeMap::new();
    let mut unscored = Vec::new();
    for p in pois {
        if p.segments.is_empty() {
            log::warn!("poi {} has no retained segments", p.poi_id);
            unscored.push(p.poi_id.clone());
            continue;
        }
        let pairs: Vec<(f64, f64)> = p.segments.iter().map(|(id, len)| (seg[id], *len)).collect();
        let score = poi_sec_score(&pairs)?;
        scored.insert(
            p.poi_id.clone(),
            PoiScore {
                score,
                category: p.category,
                sector_id: p.sector_id.clone(),
                total_length_m: pairs.iter().map(|(_, l)| l).sum(),
                segment_count: pairs.len(),
            },
        );
    }
    unscored.sort();

    let mut cells: BTreeMap<(PoiCategory, Option<String>), Vec<f64>> = BTreeMap::new();
    for s in scored.values() {
        if s.category != PoiCategory::Uncategorized {
            cells
                .entry((s.category, s.sector_id.clone()))
                .or_default()
                .push(s.score);
        }
    }
    let sector_categories: Vec<CellScore> = cells
        .into_iter()
        .map(|((category, sector_id), scores)| CellScore {
            sector_id,
            category,
            score: weighted_mean(scores.iter().map(|s| (*s, 1.0))).expect("cell holds at least one POI"),
            poi_count: scores.len() as u64,
        })
        .collect();

    let across_sector = PoiCategory::MAPPED
        .iter()
        .map(|cat| {
            let groups: Vec<(f64, u64)> = sector_categories
                .iter()
                .filter(|c| c.category == *cat)
                .map(|c| (c.score, c.poi_count))
                .collect();
            let score = poi_across_sector_score(&groups);
            let poi_count = groups.iter().map(|(_, n)| n).sum();
            (*cat, CategoryScore { score, poi_count })
        })
        .collect();

    Ok(ScoreSet {
        segments,
        pois: scored,
        unscored_pois: unscored,
        sector_categories,
        across_sector,
    })
}

/// Labels at or above `min_severity`: places where an improvement would
/// help.
pub fn count_findings(labels: &[SegmentLabel], min_severity: u8) -> usize {
    labels.iter().filter(|l| l.severity.level() >= min_severity).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Findings {
    pub min_severity: u8,
    pub count: usize,
    pub total_labels: usize,
    pub by_type: BTreeMap<LabelKind, usize>,
}

pub fn findings(labels: &[SegmentLabel], min_severity: u8) -> Findings {
    let mut by_type = BTreeMap::new();
    for l in labels.iter().filter(|l| l.severity.level() >= min_severity) {
        *by_type.entry(l.label_type).or_insert(0) += 1;
    }
    Findings {
        min_severity,
        count: count_findings(labels, min_severity),
        total_labels: labels.len(),
        by_type,
    }
}

/// Segment heat map: one LineString per scored segment with `seg_score` in
/// (0, 1), 0 the least accessible. Segments missing from `net` are emitted
/// without geometry.
pub fn heatmap_geojson(scores: &ScoreSet, net: &RoadNetwork) -> Result<geojson::FeatureCollection> {
    if scores.segments.is_empty() {
        return Err(Error::invalid("score set is empty"));
    }
    let mut features = Vec::with_capacity(scores.segments.len());
    for (id, s) in &scores.segments {
        let mut props = serde_json::Map::new();
        props.insert("segment_id".into(), id.0.into());
        props.insert("seg_score".into(), s.seg.into());
        props.insert("raw_score".into(), s.raw.into());
        props.insert("length_m".into(), s.length_m.into());
        match net.edge(*id) {
            Some(edge) => {
                props.insert("road_type".into(), edge.road_type.as_str().into());
                features.push(feature(edge.geometry.to_geojson_geometry(), props));
            }
            None => {
                log::warn!("segment {id} has no geometry; emitted without one");
                features.push(geojson::Feature {
                    bbox: None,
                    geometry: None,
                    id: None,
                    properties: Some(props),
                    foreign_members: None,
                });
            }
        }
    }
    Ok(collection(features))
}

pub const SUMMARY_CSV_HEADER: [&str; 5] = ["level", "id", "score", "weight", "sector_id"];
pub const NO_DATA: &str = "no data";

/// Summary table with `segment`, `poi`, `sector_category` and `category`
/// rows. Weights are lengths in meters for segments and POIs, POI counts
/// otherwise.
pub fn summary_csv(scores: &ScoreSet) -> Result<String> {
    if scores.segments.is_empty() {
        return Err(Error::invalid("score set is empty"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_CSV_HEADER)?;
    let sector = |s: &Option<String>| s.clone().unwrap_or_default();
    for (id, s) in &scores.segments {
        w.write_record([
            "segment",
            &id.to_string(),
            &s.seg.to_string(),
            &s.length_m.to_string(),
            &sector(&s.sector_id),
        ])?;
    }
    for (id, p) in &scores.pois {
        w.write_record([
            "poi",
            id,
            &p.score.to_string(),
            &p.total_length_m.to_string(),
            &sector(&p.sector_id),
        ])?;
    }
    for c in &scores.sector_categories {
        w.write_record([
            "sector_category",
            c.category.as_str(),
            &c.score.to_string(),
            &c.poi_count.to_string(),
            &sector(&c.sector_id),
        ])?;
    }
    for (cat, c) in &scores.across_sector {
        let score = c.score.map(|s| s.to_string()).unwrap_or_else(|| NO_DATA.to_string());
        w.write_record(["category", cat.as_str(), &score, &c.poi_count.to_string(), ""])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("summary csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label(id: &str, seg: u32, kind: LabelKind, sev: u8) -> SegmentLabel {
        SegmentLabel {
            label_id: id.into(),
            segment_id: EdgeId(seg),
            label_type: kind,
            severity: Severity::new(sev).unwrap(),
            tags: BTreeSet::new(),
            location: GeoPoint::new(30.7, 76.7).unwrap(),
            pano_id: "p".into(),
        }
    }

    #[test]
    fn contributions() {
        assert_eq!(feature_contribution(&label("a", 1, LabelKind::SurfaceProblem, 3)), -1.0);
        assert_eq!(feature_contribution(&label("a", 1, LabelKind::Crosswalk, 1)), 1.0);
        assert_eq!(feature_contribution(&label("a", 1, LabelKind::ObstacleInPath, 1)), -0.2);
        assert!((feature_contribution(&label("a", 1, LabelKind::CurbStyle, 3)) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn raw_scores_by_hand() {
        assert_eq!(raw_segment_score(&[]).unwrap(), 0.0);
        let a = [
            label("a", 1, LabelKind::SurfaceProblem, 3),
            label("b", 1, LabelKind::ObstacleInPath, 2),
        ];
        assert!((raw_segment_score(&a).unwrap() + 1.6).abs() < 1e-12);
        let b = [
            label("a", 1, LabelKind::Crosswalk, 1),
            label("b", 1, LabelKind::SurfaceProblem, 1),
        ];
        assert!((raw_segment_score(&b).unwrap() - 0.8).abs() < 1e-12);
        let mixed = [
            label("a", 1, LabelKind::Crosswalk, 1),
            label("b", 2, LabelKind::Crosswalk, 1),
        ];
        assert!(raw_segment_score(&mixed).is_err());
        assert!(FeatureVector::from_labels(EdgeId(1), &mixed).is_err());
        let fv = FeatureVector::from_labels(EdgeId(1), &a).unwrap();
        assert!((fv.total() + 1.6).abs() < 1e-12);
        assert!(fv.entries.values().all(|v| *v < 0.0));
    }

    #[test]
    fn quantile_matches_order_statistics() {
        assert_eq!(quantile_linear(&[1.0, 1.0, 10.0], 0.95), Some(9.1));
        assert_eq!(quantile_linear(&[4.0], 0.95), Some(4.0));
        assert_eq!(quantile_linear(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), Some(3.0));
        assert_eq!(quantile_linear(&[], 0.5), None);
    }

    #[test]
    fn normalize_worked_example() {
        // Tail bound 9.1, so -10 becomes -9.1 before standardizing.
        let out = normalize_values(&[-10.0, -1.0, -1.0, 0.0, 1.0]).unwrap();
        let c = [-9.1, -1.0, -1.0, 0.0, 1.0];
        let mean = c.iter().sum::<f64>() / 5.0;
        let sd = (c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0).sqrt();
        for (o, v) in out.iter().zip(c) {
            let z = (v - mean) / sd;
            assert!((o - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        }
        assert_eq!(normalize_values(&[0.3; 7]).unwrap(), vec![0.5; 7]);
        assert_eq!(normalize_values(&[0.1, 0.1, 0.1]).unwrap(), vec![0.5; 3]);
        assert!(normalize_values(&[]).is_err());
        assert!(normalize_values(&[f64::NAN]).is_err());
    }

    #[test]
    fn extreme_corpus_stays_open() {
        let mut raw = vec![0.0; 5000];
        raw[0] = 1000.0;
        let out = normalize_values(&raw).unwrap();
        assert!(out.iter().all(|s| *s > 0.0 && *s < 1.0));
    }

    #[test]
    fn aggregate_examples() {
        assert!((poi_sec_score(&[(0.2, 100.0), (0.8, 300.0)]).unwrap() - 0.65).abs() < 1e-12);
        assert_eq!(poi_sec_score(&[(0.37, 12.0)]).unwrap(), 0.37);
        assert!(poi_sec_score(&[]).is_err());
        assert!(poi_sec_score(&[(0.5, 0.0)]).is_err());
        assert!((poi_across_sector_score(&[(0.4, 1), (0.6, 3)]).unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(poi_across_sector_score(&[(0.42, 7)]), Some(0.42));
        assert_eq!(poi_across_sector_score(&[]), None);
    }

    #[test]
    fn findings_threshold() {
        let labels = [
            label("a", 1, LabelKind::SurfaceProblem, 1),
            label("b", 1, LabelKind::SurfaceProblem, 2),
            label("c", 2, LabelKind::NoSidewalk, 2),
            label("d", 3, LabelKind::Crosswalk, 3),
        ];
        assert_eq!(count_findings(&labels, 2), 3);
        let f = findings(&labels, 2);
        assert_eq!(f.by_type[&LabelKind::SurfaceProblem], 1);
        assert_eq!(f.total_labels, 4);
    }

    fn three_segment_set() -> ScoreSet {
        let labels = [
            label("a", 0, LabelKind::SurfaceProblem, 3),
            label("b", 2, LabelKind::Crosswalk, 1),
        ];
        let pois = [
            PoiSegments {
                poi_id: "p1".into(),
                category: PoiCategory::Education,
                sector_id: Some("A".into()),
                segments: vec![(EdgeId(0), 100.0), (EdgeId(1), 100.0)],
            },
            PoiSegments {
                poi_id: "p2".into(),
                category: PoiCategory::Uncategorized,
                sector_id: Some("A".into()),
                segments: vec![(EdgeId(2), 50.0)],
            },
            PoiSegments {
                poi_id: "p3".into(),
                category: PoiCategory::Education,
                sector_id: None,
                segments: vec![],
            },
        ];
        compute_scores(&labels, &pois).unwrap()
    }

    #[test]
    fn score_set_assembly() {
        let s = three_segment_set();
        assert_eq!(s.segments.len(), 3);
        assert!(s.segments[&EdgeId(0)].seg < s.segments[&EdgeId(1)].seg);
        assert!(s.segments[&EdgeId(1)].seg < s.segments[&EdgeId(2)].seg);
        assert_eq!(s.unscored_pois, vec!["p3".to_string()]);
        let p1 = &s.pois["p1"];
        assert!((p1.score - (s.segments[&EdgeId(0)].seg + s.segments[&EdgeId(1)].seg) / 2.0).abs() < 1e-12);
        assert_eq!(s.sector_categories.len(), 1);
        let edu = &s.across_sector[&PoiCategory::Education];
        assert_eq!((edu.score, edu.poi_count), (Some(p1.score), 1));
        assert_eq!(s.across_sector[&PoiCategory::Healthcare].score, None);
        assert_eq!(s.across_sector.len(), 10);

        let csv = summary_csv(&s).unwrap();
        assert!(csv.starts_with("level,id,score,weight,sector_id\n"));
        assert_eq!(csv.lines().filter(|l| l.starts_with("segment,")).count(), 3);
        assert!(csv.contains("category,Healthcare,no data,0,"));
        assert_eq!(csv, summary_csv(&three_segment_set()).unwrap());
    }

    #[test]
    fn heatmap_round_trips_properties() {
        use crate::road_graph::{EdgeSpec, NodeId, RoadType};
        let nodes: Vec<GeoPoint> = (0..4)
            .map(|i| GeoPoint::new(30.7, 76.7 + 0.001 * i as f64).unwrap())
            .collect();
        let specs = (0..3)
            .map(|i| EdgeSpec {
                from: NodeId(i),
                to: NodeId(i + 1),
                geometry: None,
                road_type: RoadType::Residential,
            })
            .collect();
        let net = RoadNetwork::from_parts(nodes, specs).unwrap();
        let s = three_segment_set();
        let fc = heatmap_geojson(&s, &net).unwrap();
        assert_eq!(fc.features.len(), 3);
        let back: geojson::FeatureCollection = fc.to_string().parse::<geojson::GeoJson>().unwrap().try_into().unwrap();
        for (f, (id, seg)) in back.features.iter().zip(&s.segments) {
            let props = f.properties.as_ref().unwrap();
            assert_eq!(props["segment_id"], serde_json::json!(id.0));
            assert_eq!(props["seg_score"].as_f64().unwrap(), seg.seg);
            assert_eq!(props["road_type"], "residential");
            assert!(f.geometry.is_some());
        }
    }

    #[test]
    fn heatmap_without_network_geometry() {
        let s = three_segment_set();
        let net = RoadNetwork::from_parts(vec![], vec![]).unwrap();
        let fc = heatmap_geojson(&s, &net).unwrap();
        assert_eq!(fc.features.len(), 3);
        assert!(fc.features.iter().all(|f| f.geometry.is_none()));
        let empty = ScoreSet {
            segments: BTreeMap::new(),
            pois: BTreeMap::new(),
            unscored_pois: vec![],
            sector_categories: vec![],
            across_sector: BTreeMap::new(),
        };
        assert!(summary_csv(&empty).is_err());
        assert!(heatmap_geojson(&empty, &net).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_monotone_and_open(raw in prop::collection::vec(-6.0f64..6.0, 1..60)) {
            let out = normalize_values(&raw).unwrap();
            for i in 0..raw.len() {
                prop_assert!(out[i] > 0.0 && out[i] < 1.0);
                for j in 0..raw.len() {
                    if raw[i] <= raw[j] {
                        prop_assert!(out[i] <= out[j]);
                    }
                }
            }
        }

        #[test]
        fn raw_score_is_additive(
            a in prop::collection::vec((0usize..7, 1u8..=3), 0..6),
            b in prop::collection::vec((0usize..7, 1u8..=3), 0..6),
        ) {
            let mk = |v: &[(usize, u8)], p: &str| -> Vec<SegmentLabel> {
                v.iter().enumerate().map(|(i, (k, s))| label(&format!("{p}{i}"), 4, LabelKind::ALL[*k], *s)).collect()
            };
            let (la, lb) = (mk(&a, "a"), mk(&b, "b"));
            let both: Vec<SegmentLabel> = la.iter().chain(&lb).cloned().collect();
            let lhs = raw_segment_score(&both).unwrap();
            let rhs = raw_segment_score(&la).unwrap() + raw_segment_score(&lb).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
