//! Per-segment mission guidance from a vision language model.
//!
//! A [`Session`] decides when an annotator's navigation should produce new
//! guidance. [`Guide`] turns a segment's road type and boundary panoramas
//! into a prompt, calls the configured [`VlmClient`] once per segment and
//! falls back to a canned message when the model is unavailable. The cache
//! never expires; refreshed imagery does not regenerate guidance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::coverage::StreetViewMetaClient;
use crate::labels::Taxonomy;
use crate::road_graph::{EdgeId, RoadNetwork, RoadType};
use crate::{Error, Result};

pub const MAX_MESSAGE_CHARS: usize = 600;
pub const DEFAULT_MODEL_ID: &str = "gemini-2.5-flash";
pub const MOCK_MODEL_ID: &str = "mock";

const RESIDENTIAL_EMPHASIS: &str = "Streets like this rarely have a separate sidewalk, so treat the road itself as the \
pedestrian path and focus on obstacles blocking it and on surface problems such as potholes, broken paving or open drains.";
const MAJOR_EMPHASIS: &str =
    "Roads of this class are expected to have a constructed sidewalk: prioritize checking for \
missing curb ramps at corners and driveways, then look for marked crosswalks and pedestrian signals at junctions.";
const OTHER_EMPHASIS: &str = "First check whether any usable walking surface exists, then look for obstacles, surface \
problems, curb transitions and crossings.";

/// Reference to one street-level panorama. The image handle is opaque to
/// everything except live clients, which load and encode it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanoramaRef {
    pub pano_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceRequest {
    pub segment_id: EdgeId,
    pub road_type: RoadType,
    pub start_pano: PanoramaRef,
    pub end_pano: PanoramaRef,
}

impl GuidanceRequest {
    pub fn new(
        segment_id: EdgeId,
        road_type: RoadType,
        start_pano: PanoramaRef,
        end_pano: PanoramaRef,
    ) -> Result<Self> {
        for p in [&start_pano, &end_pano] {
            if p.pano_id.trim().is_empty() {
                return Err(Error::invalid(format!("segment {segment_id}: empty panorama id")));
            }
        }
        Ok(GuidanceRequest {
            segment_id,
            road_type,
            start_pano,
            end_pano,
        })
    }
}

/// Builds the request for `segment` from the panoramas nearest its two ends.
pub fn request_for_segment(
    net: &RoadNetwork,
    streetview: &dyn StreetViewMetaClient,
    segment: EdgeId,
) -> Result<GuidanceRequest> {
    let edge = net
        .edge(segment)
        .ok_or_else(|| Error::NotFound(format!("segment {segment}")))?;
    let mut panos = Vec::with_capacity(2);
    for p in [edge.geometry.first(), edge.geometry.last()] {
        let pano = streetview
            .query(p)
            .map_err(|e| Error::invalid(format!("segment {segment}: {e}")))?
            .ok_or_else(|| Error::NotFound(format!("panorama near segment {segment}")))?;
        panos.push(PanoramaRef {
            pano_id: pano.pano_id,
            image: None,
        });
    }
    let end = panos.pop().expect("two panoramas");
    let start = panos.pop().expect("two panoramas");
    GuidanceRequest::new(segment, edge.road_type, start, end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceMessage {
    pub segment_id: EdgeId,
    pub road_type: RoadType,
    pub text: String,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub model_id: String,
    /// Set when the text is the canned fallback rather than model output.
    pub degraded: bool,
}

impl GuidanceMessage {
    /// The JSON-lines log record.
    pub fn log_line(&self) -> String {
        serde_json::json!({
            "segment_id": self.segment_id,
            "road_type": self.road_type,
            "text": self.text,
            "degraded": self.degraded,
            "model_id": self.model_id,
        })
        .to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MissionStart,
    SegmentChange,
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub kind: EventKind,
    pub segment_id: EdgeId,
}

/// Parses one event per line; blank lines are skipped.
pub fn parse_events(text: &str) -> Result<Vec<SessionEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::schema(format!("line {}", i + 1), e.to_string())))
        .collect()
}

/// Navigation state of one annotation session.
#[derive(Debug, Clone)]
pub struct Session {
    known: BTreeSet<EdgeId>,
    current: Option<EdgeId>,
}

impl Session {
    pub fn new(known: BTreeSet<EdgeId>) -> Self {
        Session { known, current: None }
    }

    pub fn for_network(net: &RoadNetwork) -> Self {
        Session::new(net.edge_ids())
    }

    pub fn current(&self) -> Option<EdgeId> {
        self.current
    }

    /// Records `event` and reports whether it should produce guidance: any
    /// of the three event kinds fires when it lands on a segment other than
    /// the current one.
    pub fn should_trigger(&mut self, event: &SessionEvent) -> Result<bool> {
        if !self.known.contains(&event.segment_id) {
            return Err(Error::NotFound(format!("segment {}", event.segment_id)));
        }
        let fire = self.current != Some(event.segment_id);
        self.current = Some(event.segment_id);
        Ok(fire)
    }
}

fn road_label(road: RoadType) -> &'static str {
    match road {
        RoadType::Residential => "residential street",
        RoadType::Tertiary => "tertiary road",
        RoadType::Secondary => "secondary road",
        RoadType::Primary => "primary road",
        RoadType::Other => "unclassified road",
    }
}

/// The prompt for `req`. Only the road type and the taxonomy shape the text.
pub fn build_prompt(req: &GuidanceRequest, taxonomy: &Taxonomy) -> String {
    let emphasis = match req.road_type {
        RoadType::Residential => RESIDENTIAL_EMPHASIS,
        RoadType::Tertiary | RoadType::Secondary | RoadType::Primary => MAJOR_EMPHASIS,
        RoadType::Other => OTHER_EMPHASIS,
    };
    let mut p = String::new();
    p.push_str(
        "You are guiding volunteers who audit sidewalk accessibility in Indian cities from street-level imagery.\n",
    );
    p.push_str("The two images are the first and last panoramas along one street segment.\n");
    let _ = writeln!(p, "Road type: {}.", road_label(req.road_type));
    let _ = writeln!(p, "{emphasis}");
    let _ = writeln!(p, "Use only this label vocabulary ({}):", taxonomy.version);
    for t in &taxonomy.label_types {
        let tags: Vec<&str> = t.allowed_tags.iter().map(String::as_str).collect();
        let _ = writeln!(p, "- {} ({:?}): {}", t.display_name, t.polarity, tags.join(", "));
    }
    p.push_str("Answer in at most 3 sentences of practical advice on what to look for and label on this segment.\n");
    p
}

/// Canned guidance used when the model cannot answer.
pub fn fallback_message(road: RoadType) -> &'static str {
    match road {
        RoadType::Residential => {
            "Treat the road edge as the walking path. Label obstacles such as parked vehicles \
or vendor carts and surface problems such as potholes or broken paving."
        }
        RoadType::Tertiary | RoadType::Secondary | RoadType::Primary => {
            "Expect a built sidewalk here. Check corners \
and driveways for missing curb ramps and junctions for crosswalks and pedestrian signals."
        }
        RoadType::Other => {
            "Check whether a usable sidewalk exists, then label obstacles, surface problems, curbs \
and crossings you can see."
        }
    }
}

/// Shortens `text` to at most `max_chars` characters, cutting after the
/// last complete sentence that fits. Falls back to a hard cut when no
/// sentence end is available.
pub fn truncate_at_sentence(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let byte_limit = text.char_indices().nth(max_chars).map(|(b, _)| b).unwrap_or(text.len());
    let head = &text[..byte_limit];
    let mut cut = None;
    let mut chars = head.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let next = chars
                .peek()
                .map(|(_, n)| *n)
                .or_else(|| text[byte_limit..].chars().next());
            if next.is_none_or(char::is_whitespace) {
                cut = Some(i + c.len_utf8());
            }
        }
    }
    match cut {
        Some(end) => head[..end].to_string(),
        None => head.trim_end().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("vision model request failed: {0}")]
pub struct VlmError(pub String);

/// A vision language model endpoint. Implementations must tolerate calls
/// from several sessions at once.
pub trait VlmClient: Send + Sync {
    fn model_id(&self) -> &str;
    fn generate(&self, prompt: &str, images: &[PanoramaRef]) -> std::result::Result<String, VlmError>;
}

#[derive(Debug, Clone)]
enum MockMode {
    Fixed(String),
    RoadAware,
    Failing,
}

/// Deterministic offline client. Ignores the images and counts its calls.
#[derive(Debug)]
pub struct MockVlmClient {
    mode: MockMode,
    calls: AtomicUsize,
}

impl MockVlmClient {
    /// Always answers `text`.
    pub fn fixed(text: impl Into<String>) -> Self {
        MockVlmClient {
            mode: MockMode::Fixed(text.into()),
            calls: AtomicUsize::new(0),
        }
    }

    /// Answers with a short message keyed on the prompt's road type line.
    pub fn road_aware() -> Self {
        MockVlmClient {
            mode: MockMode::RoadAware,
            calls: AtomicUsize::new(0),
        }
    }

    /// Fails every request.
    pub fn failing() -> Self {
        MockVlmClient {
            mode: MockMode::Failing,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl VlmClient for MockVlmClient {
    fn model_id(&self) -> &str {
        MOCK_MODEL_ID
    }

    fn generate(&self, prompt: &str, _images: &[PanoramaRef]) -> std::result::Result<String, VlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match &self.mode {
            MockMode::Fixed(t) => Ok(t.clone()),
            MockMode::Failing => Err(VlmError("mock failure".into())),
            MockMode::RoadAware => {
                let road = prompt
                    .lines()
                    .find_map(|l| l.strip_prefix("Road type: "))
                    .unwrap_or("road.")
                    .trim_end_matches('.');
                Ok(format!(
                    "On this {road}, walk the segment from the first panorama to the last. \
Label every obstacle and surface problem you see and rate how severe each one is."
                ))
            }
        }
    }
}

fn now_secs() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Generates and caches guidance for one session.
pub struct Guide<'a> {
    client: &'a dyn VlmClient,
    taxonomy: &'a Taxonomy,
    cache: BTreeMap<EdgeId, GuidanceMessage>,
}

impl<'a> Guide<'a> {
    pub fn new(client: &'a dyn VlmClient, taxonomy: &'a Taxonomy) -> Self {
        Guide {
            client,
            taxonomy,
            cache: BTreeMap::new(),
        }
    }

    /// Guidance for `req.segment_id`, calling the client only on the first
    /// request for that segment. Failures and empty answers are cached as
    /// degraded fallback messages too.
    pub fn generate(&mut self, req: &GuidanceRequest) -> GuidanceMessage {
        if let Some(m) = self.cache.get(&req.segment_id) {
            return m.clone();
        }
        let prompt = build_prompt(req, self.taxonomy);
        let images = [req.start_pano.clone(), req.end_pano.clone()];
        let answer = self
            .client
            .generate(&prompt, &images)
            .map(|t| truncate_at_sentence(&t, MAX_MESSAGE_CHARS));
        let (text, degraded) = match answer {
            Ok(t) if !t.is_empty() => (t, false),
            Ok(_) => {
                log::warn!(
                    "segment {}: empty guidance from {}",
                    req.segment_id,
                    self.client.model_id()
                );
                (fallback_message(req.road_type).to_string(), true)
            }
            Err(e) => {
                log::warn!("segment {}: {e}", req.segment_id);
                (fallback_message(req.road_type).to_string(), true)
            }
        };
        let msg = GuidanceMessage {
            segment_id: req.segment_id,
            road_type: req.road_type,
            text,
            generated_at: now_secs(),
            model_id: self.client.model_id().to_string(),
            degraded,
        };
        self.cache.insert(req.segment_id, msg.clone());
        msg
    }

    /// Fallback guidance for a segment whose request could not be built.
    pub fn degraded(&mut self, segment_id: EdgeId, road_type: RoadType) -> GuidanceMessage {
        self.cache
            .entry(segment_id)
            .or_insert_with(|| GuidanceMessage {
                segment_id,
                road_type,
                text: fallback_message(road_type).to_string(),
                generated_at: now_secs(),
                model_id: self.client.model_id().to_string(),
                degraded: true,
            })
            .clone()
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}
