//! POI extraction: sample query points over a sector, fetch places, drop
//! coordinate duplicates and map provider types onto ten categories.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_distance, GeoPoint, Grid, ZonePolygon};
use crate::{Error, Result};

const BUILTIN_POI_TAXONOMY: &str = include_str!("../data/poi_taxonomy.json");

pub const DEFAULT_QUERY_RADIUS_M: f64 = 400.0;
pub const DEFAULT_SAMPLE_SPACING_M: f64 = 400.0;

/// Decimal places kept in the coordinate key used for deduplication.
pub const DEDUP_DECIMALS: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PoiCategory {
    #[serde(rename = "Financial services")]
    FinancialServices,
    Education,
    Healthcare,
    #[serde(rename = "Public service")]
    PublicService,
    Transport,
    Food,
    Religious,
    Utilities,
    Commercial,
    Social,
    Uncategorized,
}

impl PoiCategory {
    pub const MAPPED: [PoiCategory; 10] = [
        PoiCategory::FinancialServices,
        PoiCategory::Education,
        PoiCategory::Healthcare,
        PoiCategory::PublicService,
        PoiCategory::Transport,
        PoiCategory::Food,
        PoiCategory::Religious,
        PoiCategory::Utilities,
        PoiCategory::Commercial,
        PoiCategory::Social,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PoiCategory::FinancialServices => "Financial services",
            PoiCategory::Education => "Education",
            PoiCategory::Healthcare => "Healthcare",
            PoiCategory::PublicService => "Public service",
            PoiCategory::Transport => "Transport",
            PoiCategory::Food => "Food",
            PoiCategory::Religious => "Religious",
            PoiCategory::Utilities => "Utilities",
            PoiCategory::Commercial => "Commercial",
            PoiCategory::Social => "Social",
            PoiCategory::Uncategorized => "Uncategorized",
        }
    }
}

impl fmt::Display for PoiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PoiCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PoiCategory::MAPPED
            .iter()
            .chain([PoiCategory::Uncategorized].iter())
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown POI category {s:?}")))
    }
}

/// Category → provider type lists, validated so every type maps to exactly
/// one category.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiTaxonomy {
    categories: BTreeMap<PoiCategory, Vec<String>>,
    by_type: HashMap<String, PoiCategory>,
}

impl PoiTaxonomy {
    pub fn builtin() -> PoiTaxonomy {
        PoiTaxonomy::from_json(BUILTIN_POI_TAXONOMY).expect("bundled POI taxonomy is valid")
    }

    pub fn from_json(text: &str) -> Result<PoiTaxonomy> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::schema("POI taxonomy", e.to_string()))?;
        let mut categories = BTreeMap::new();
        let mut by_type = HashMap::new();
        for (name, types) in raw {
            let category: PoiCategory = name
                .parse()
                .map_err(|_| Error::schema("POI taxonomy", format!("unknown category {name:?}")))?;
            if category == PoiCategory::Uncategorized {
                return Err(Error::schema("POI taxonomy", "Uncategorized cannot list types"));
            }
            for t in &types {
                if let Some(prev) = by_type.insert(t.clone(), category) {
                    return Err(Error::schema(
                        "POI taxonomy",
                        format!("type {t:?} listed under both {prev} and {category}"),
                    ));
                }
            }
            categories.insert(category, types);
        }
        Ok(PoiTaxonomy { categories, by_type })
    }

    pub fn category_of(&self, provider_type: &str) -> Option<PoiCategory> {
        self.by_type.get(provider_type).copied()
    }

    pub fn types(&self, category: PoiCategory) -> &[String] {
        self.categories.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_types(&self) -> impl Iterator<Item = (&str, PoiCategory)> {
        self.categories
            .iter()
            .flat_map(|(c, ts)| ts.iter().map(move |t| (t.as_str(), *c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub provider_id: String,
    pub location: GeoPoint,
    pub raw_types: Vec<String>,
    pub category: PoiCategory,
    pub sector_id: Option<String>,
}

impl PoiRecord {
    pub fn new(provider_id: impl Into<String>, location: GeoPoint, raw_types: Vec<String>) -> Result<Self> {
        if raw_types.is_empty() {
            return Err(Error::invalid("POI needs at least one provider type"));
        }
        Ok(PoiRecord {
            provider_id: provider_id.into(),
            location,
            raw_types,
            category: PoiCategory::Uncategorized,
            sector_id: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacesQuery {
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl PlacesQuery {
    pub fn new(center: GeoPoint, radius_m: f64) -> Result<Self> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(Error::invalid(format!("query radius must be positive, got {radius_m}")));
        }
        Ok(PlacesQuery { center, radius_m })
    }
}

impl fmt::Display for PlacesQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.6}, {:.6}) r={} m",
            self.center.lat(),
            self.center.lon(),
            self.radius_m
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacesError {
    /// Network or server hiccup; the query may be retried.
    #[error("transport failure for {query}: {message}")]
    Transport { query: String, message: String },
    #[error("quota exhausted while querying {query}")]
    QuotaExhausted { query: String },
    #[error("provider rejected {query}: {status}")]
    Rejected { query: String, status: String },
    #[error("malformed provider response: {0}")]
    InvalidResponse(String),
    #[error("no fixture recording for {0}")]
    FixtureMiss(String),
}

impl PlacesError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, PlacesError::Transport { .. })
    }
}

/// Source of nearby places for a query point.
pub trait PlacesClient: Send + Sync {
    fn nearby(&self, query: &PlacesQuery) -> std::result::Result<Vec<PoiRecord>, PlacesError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacesResponse {
    pub status: String,
    #[serde(default)]
    pub results: Vec<PlaceResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    /// Token for the next result page, when the provider paginates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_page_token: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaceResult {
    pub place_id: String,
    pub geometry: PlaceGeometry,
    pub types: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaceGeometry {
    pub location: LatLng,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatLng {
    pub lat: f64,
    pub lng: f64,
}

/// Converts a Nearby Search style response into uncategorized records.
pub fn parse_places_response(
    response: &PlacesResponse,
    query: &PlacesQuery,
) -> std::result::Result<Vec<PoiRecord>, PlacesError> {
    match response.status.as_str() {
        "OK" | "ZERO_RESULTS" => {}
        "OVER_QUERY_LIMIT" => {
            return Err(PlacesError::QuotaExhausted {
                query: query.to_string(),
            })
        }
        "UNKNOWN_ERROR" => {
            return Err(PlacesError::Transport {
                query: query.to_string(),
                message: response.error_message.clone().unwrap_or_else(|| "UNKNOWN_ERROR".into()),
            })
        }
        other => {
            return Err(PlacesError::Rejected {
                query: query.to_string(),
                status: other.to_string(),
            })
        }
    }
    response
        .results
        .iter()
        .map(|r| {
            let loc = GeoPoint::new(r.geometry.location.lat, r.geometry.location.lng)
                .map_err(|e| PlacesError::InvalidResponse(format!("{}: {e}", r.place_id)))?;
            PoiRecord::new(r.place_id.clone(), loc, r.types.clone())
                .map_err(|e| PlacesError::InvalidResponse(format!("{}: {e}", r.place_id)))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacesRecording {
    pub center: GeoPoint,
    pub radius_m: f64,
    pub response: PlacesResponse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacesFixture {
    /// Query centers within this distance of a recording replay it.
    #[serde(default = "default_match_tolerance")]
    pub match_tolerance_m: f64,
    pub recordings: Vec<PlacesRecording>,
}

fn default_match_tolerance() -> f64 {
    1.0
}

/// Replays recorded provider responses; a query with no matching recording
/// fails with [`PlacesError::FixtureMiss`].
#[derive(Debug, Clone)]
pub struct FixturePlacesClient {
    fixture: PlacesFixture,
}

impl FixturePlacesClient {
    pub fn new(fixture: PlacesFixture) -> Self {
        FixturePlacesClient { fixture }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fixture: PlacesFixture =
            serde_json::from_str(text).map_err(|e| Error::schema("places fixture", e.to_string()))?;
        Ok(FixturePlacesClient::new(fixture))
    }
}

impl PlacesClient for FixturePlacesClient {
    fn nearby(&self, query: &PlacesQuery) -> std::result::Result<Vec<PoiRecord>, PlacesError> {
        let rec = self
            .fixture
            .recordings
            .iter()
            .find(|r| {
                (r.radius_m - query.radius_m).abs() < 1e-9
                    && haversine_distance(&r.center, &query.center) <= self.fixture.match_tolerance_m
            })
            .ok_or_else(|| PlacesError::FixtureMiss(query.to_string()))?;
        parse_places_response(&rec.response, query)
    }
}

/// Token bucket shared by concurrent workers.
#[derive(Debug)]
pub struct RateLimiter {
    state: Mutex<(f64, Instant)>,
    capacity: f64,
    per_second: f64,
}

impl RateLimiter {
    pub fn new(per_second: f64, burst: u32) -> Self {
        RateLimiter {
            state: Mutex::new((burst as f64, Instant::now())),
            capacity: burst.max(1) as f64,
            per_second: per_second.max(f64::MIN_POSITIVE),
        }
    }

    /// Blocks until one token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.per_second).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Runs one query; results are passed through unfiltered.
pub fn fetch_pois(client: &dyn PlacesClient, query: &PlacesQuery) -> std::result::Result<Vec<PoiRecord>, PlacesError> {
    client.nearby(query)
}

/// Options for [`fetch_all`].
#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub workers: usize,
    pub requests_per_second: f64,
    pub max_retries: u32,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            workers: 4,
            requests_per_second: 10.0,
            max_retries: 2,
        }
    }
}

/// Fetches every query on a bounded pool, retrying transport failures.
/// Results are concatenated in query order.
pub fn fetch_all(
    client: &dyn PlacesClient,
    queries: &[PlacesQuery],
    opts: &FetchOptions,
) -> std::result::Result<Vec<PoiRecord>, PlacesError> {
    use rayon::prelude::*;

    let limiter = RateLimiter::new(opts.requests_per_second, opts.workers as u32);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| PlacesError::Transport {
            query: "worker pool".into(),
            message: e.to_string(),
        })?;
    let per_query: Vec<_> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| {
                let mut attempt = 0;
                loop {
                    limiter.acquire();
                    match fetch_pois(client, q) {
                        Err(e) if e.is_retryable() && attempt < opts.max_retries => {
                            log::warn!("{e}; retrying");
                            attempt += 1;
                        }
                        other => return other,
                    }
                }
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_query {
        out.extend(r?);
    }
    Ok(out)
}

/// One query point per grid cell whose centroid falls inside the sector.
///
/// The grid is centred on the sector's bounding box, so a sector smaller
/// than the spacing yields its box centre.
pub fn sample_points(sector: &ZonePolygon, spacing_m: f64) -> Result<Vec<GeoPoint>> {
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::invalid(format!(
            "sample spacing must be positive, got {spacing_m}"
        )));
    }
    let bounds = sector.bounds();
    if bounds.south >= bounds.north || bounds.west >= bounds.east {
        return Err(Error::invalid(format!("sector {} is degenerate", sector.id)));
    }
    let grid = Grid::centered(&bounds, spacing_m)?;
    Ok(grid
        .cells()
        .iter()
        .map(|c| c.centroid())
        .filter(|p| sector.contains(p))
        .collect())
}

fn coord_key(p: &GeoPoint) -> (i64, i64) {
    let scale = 10f64.powi(DEDUP_DECIMALS);
    ((p.lat() * scale).round() as i64, (p.lon() * scale).round() as i64)
}

/// Keeps the first record for each coordinate rounded to six decimals.
pub fn dedup(records: Vec<PoiRecord>) -> Vec<PoiRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(coord_key(&r.location)))
        .collect()
}

/// Assigns the category of the first provider type present in the taxonomy.
pub fn categorize(mut record: PoiRecord, taxonomy: &PoiTaxonomy) -> PoiRecord {
    record.category = record
        .raw_types
        .iter()
        .find_map(|t| taxonomy.category_of(t))
        .unwrap_or(PoiCategory::Uncategorized);
    record
}

/// Sets `sector_id` to the first sector containing each POI.
pub fn assign_sectors(records: &mut [PoiRecord], sectors: &[ZonePolygon]) {
    for r in records {
        r.sector_id = sectors.iter().find(|s| s.contains(&r.location)).map(|s| s.id.clone());
    }
}

/// Number of POIs of one category per sector.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SectorCounts {
    pub per_sector: BTreeMap<String, usize>,
    pub unassigned: usize,
}

impl SectorCounts {
    /// Sector with the most POIs; ties go to the smaller sector id.
    pub fn argmax(&self) -> Option<(&str, usize)> {
        self.per_sector
            .iter()
            .fold(None, |best: Option<(&str, usize)>, (k, v)| match best {
                Some((_, bv)) if bv >= *v => best,
                _ => Some((k.as_str(), *v)),
            })
    }

    /// Reads a `sector,count` table such as externally sourced commercial
    /// counts.
    pub fn from_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            sector: String,
            count: usize,
        }
        let mut out = SectorCounts::default();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.deserialize::<Row>() {
            let row = row?;
            *out.per_sector.entry(row.sector).or_default() += row.count;
        }
        Ok(out)
    }
}

/// Counts POIs of `category` per sector. Every id in `sectors` appears in the
/// result even when its count is zero.
pub fn count_by_category(pois: &[PoiRecord], category: PoiCategory, sectors: &[&str]) -> SectorCounts {
    let mut out = SectorCounts {
        per_sector: sectors.iter().map(|s| (s.to_string(), 0)).collect(),
        unassigned: 0,
    };
    for p in pois.iter().filter(|p| p.category == category) {
        match &p.sector_id {
            Some(s) => *out.per_sector.entry(s.clone()).or_default() += 1,
            None => out.unassigned += 1,
        }
    }
    out
}

/// Full sector × category table.
pub fn category_table(pois: &[PoiRecord], sectors: &[&str]) -> BTreeMap<PoiCategory, SectorCounts> {
    let present: BTreeSet<PoiCategory> = pois.iter().map(|p| p.category).collect();
    PoiCategory::MAPPED
        .iter()
        .copied()
        .chain(present)
        .map(|c| (c, count_by_category(pois, c, sectors)))
        .collect()
}

pub const POI_CSV_HEADER: [&str; 6] = ["provider_id", "lat", "lon", "raw_types", "category", "sector_id"];

pub fn write_pois_csv(pois: &[PoiRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POI_CSV_HEADER)?;
    for p in pois {
        w.write_record([
            p.provider_id.clone(),
            format!("{:.7}", p.location.lat()),
            format!("{:.7}", p.location.lon()),
            p.raw_types.join(";"),
            p.category.to_string(),
            p.sector_id.clone().unwrap_or_default(),
        ])?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
        .map_err(|e| Error::invalid(e.to_string()))
}

pub fn read_pois_csv(text: &str) -> Result<Vec<PoiRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != POI_CSV_HEADER {
        return Err(Error::schema(
            "line 1",
            format!("expected header {}", POI_CSV_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: String| Error::schema(format!("line {line}"), m);
        let lat: f64 = rec[1].parse().map_err(|_| bad(format!("lat {:?}", &rec[1])))?;
        let lon: f64 = rec[2].parse().map_err(|_| bad(format!("lon {:?}", &rec[2])))?;
        let loc = GeoPoint::new(lat, lon).map_err(|e| bad(e.to_string()))?;
        let types = rec[3]
            .split(';')
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        let mut poi = PoiRecord::new(&rec[0], loc, types).map_err(|e| bad(e.to_string()))?;
        poi.category = rec[4].parse().map_err(|e: Error| bad(e.to_string()))?;
        poi.sector_id = Some(rec[5].to_string()).filter(|s| !s.is_empty());
        out.push(poi);
    }
    Ok(out)
}
