//! Command line front-end. Every stage reads its inputs from files and
//! writes its artifacts into the output directory, so stages can be rerun
//! on their own.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Aggregation, AuditConfig, ClientMode};

use crate::coverage::{
    build_coverage, filter_segments, CoverageVerdict, FixtureStreetViewClient, StreetViewMetaClient,
};
use crate::error::read_to_string;
use crate::geo::{allocate_population, load_zones, ZonePolygon};
use crate::guidance::{parse_events, request_for_segment, Guide, MockVlmClient, Session, VlmClient};
use crate::labels::{load_taxonomy, parse_labels, Taxonomy};
use crate::poi_pipeline::{
    assign_sectors, categorize, category_table, dedup, fetch_all, read_pois_csv, sample_points, write_pois_csv,
    FixturePlacesClient, PlacesClient, PlacesQuery, PoiCategory, PoiRecord, PoiTaxonomy, SectorCounts,
};
use crate::ratings::{agreement_csv, descriptive_csv, parse_ratings_csv, rating_report};
use crate::road_graph::{collection, load_network, nearest_node, trace_paths, EdgeId, NodeId, RoadNetwork};
use crate::scoring::{
    compute_scores, findings, heatmap_geojson, segments_within_buffer, select_segments, summary_csv, PoiSegments,
};
use crate::{Error, Result};

pub const POIS_FILE: &str = "pois.csv";
pub const CATEGORY_COUNTS_FILE: &str = "category_counts.csv";
pub const TRACES_FILE: &str = "traces.json";
pub const TRACES_GEOJSON_FILE: &str = "traces.geojson";
pub const COVERAGE_FILE: &str = "coverage.json";
pub const COVERAGE_GEOJSON_FILE: &str = "coverage.geojson";
pub const SCORES_FILE: &str = "scores.json";
pub const HEATMAP_FILE: &str = "heatmap.geojson";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FINDINGS_FILE: &str = "findings.json";
pub const GUIDANCE_FILE: &str = "guidance.jsonl";
pub const DESCRIPTIVE_FILE: &str = "descriptive.csv";
pub const AGREEMENT_FILE: &str = "agreement.csv";
pub const SECTOR_SELECTION_FILE: &str = "sector_selection.json";

pub const PLACES_FIXTURE: &str = "places.json";
pub const STREETVIEW_FIXTURE: &str = "streetview.json";

#[derive(Debug, Parser)]
#[command(
    name = "sidewalk-audit",
    version,
    about = "POI-centric sidewalk accessibility audits"
)]
pub struct Cli {
    /// Key-value (TOML) configuration file.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set trace_budget_m=800`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Directory that stage artifacts are read from and written to.
    #[arg(long, short, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample query points, fetch, deduplicate and categorize POIs.
    Pois,
    /// Collect the road segments within the walking budget of each POI.
    Trace,
    /// Build street-view coverage masks and filter traced segments.
    Coverage,
    /// Score labelled segments, POIs and categories.
    Score,
    /// Turn a session event log into per-segment guidance.
    Guidance(GuidanceArgs),
    /// Agreement statistics for a ratings CSV.
    Rate(RateArgs),
    /// Rank sectors by POI counts and allocate ward population.
    Sectors(SectorArgs),
    /// Run pois, trace, coverage and score in sequence.
    Audit,
}

#[derive(Debug, Args)]
pub struct GuidanceArgs {
    /// JSON-lines session events; defaults to `events` from the config.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Use the live vision model instead of the offline mock.
    #[arg(long)]
    pub live: bool,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// CSV with criterion, rater, item, score columns.
    pub ratings: PathBuf,
}

#[derive(Debug, Args)]
pub struct SectorArgs {
    /// `sector,count` table to rank instead of counting POIs from pois.csv.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// POI category to count.
    #[arg(long, default_value = "Commercial")]
    pub category: String,
}

/// Per-POI traced segments, as written to `traces.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiTrace {
    pub poi_id: String,
    pub origin: Option<NodeId>,
    pub budget_m: f64,
    pub edges: Vec<EdgeId>,
}

/// Per-POI coverage outcome, as written to `coverage.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiCoverage {
    pub poi_id: String,
    pub covered_cells: usize,
    pub total_cells: usize,
    pub verdicts: Vec<CoverageVerdict>,
}

/// Counts printed by the `score` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub segments: usize,
    pub pois: usize,
    pub unscored_pois: usize,
    pub findings: usize,
}

/// Installs the JSON-lines logger on stderr. `RUST_LOG` adjusts the level.
pub fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env)
        .format(|buf, record| {
            let ts = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0);
            let line = serde_json::json!({
                "ts": ts,
                "level": record.level().as_str(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .try_init();
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::Rate(args) = &cli.command {
        return rate(args, &cli.out);
    }
    let cfg = AuditConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Pois => pois_stage(&cfg, &cli.out),
        Command::Trace => trace_stage(&cfg, &cli.out),
        Command::Coverage => coverage_stage(&cfg, &cli.out),
        Command::Score => score_stage(&cfg, &cli.out).map(|_| ()),
        Command::Guidance(args) => guidance_stage(&cfg, args, &cli.out),
        Command::Sectors(args) => sectors_stage(&cfg, args, &cli.out),
        Command::Audit => audit(&cfg, &cli.out).map(|_| ()),
        Command::Rate(_) => unreachable!("handled above"),
    }
}

/// Full chain. Returns the score stage summary.
pub fn audit(cfg: &AuditConfig, out: &Path) -> Result<ScoreSummary> {
    pois_stage(cfg, out)?;
    trace_stage(cfg, out)?;
    coverage_stage(cfg, out)?;
    score_stage(cfg, out)
}

fn write_artifact(out: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out.display().to_string(), e))?;
    let path = out.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

fn load_net(cfg: &AuditConfig) -> Result<RoadNetwork> {
    load_network(&read_to_string(cfg.require("network", &cfg.network)?)?)
}

fn load_sectors(cfg: &AuditConfig) -> Result<Vec<ZonePolygon>> {
    load_zones(&read_to_string(cfg.require("sectors", &cfg.sectors)?)?)
}

fn load_label_taxonomy(cfg: &AuditConfig) -> Result<Taxonomy> {
    match &cfg.label_taxonomy {
        Some(p) => load_taxonomy(&read_to_string(p)?),
        None => Ok(Taxonomy::builtin()),
    }
}

fn load_pois(out: &Path) -> Result<Vec<PoiRecord>> {
    read_pois_csv(&read_to_string(&out.join(POIS_FILE))?)
}

fn worker_pool(cfg: &AuditConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn places_client(cfg: &AuditConfig) -> Result<Box<dyn PlacesClient>> {
    match cfg.client_mode {
        ClientMode::Fixture => {
            let path = cfg.fixtures()?.join(PLACES_FIXTURE);
            Ok(Box::new(FixturePlacesClient::from_json(&read_to_string(&path)?)?))
        }
        ClientMode::Live => live_places(),
    }
}

fn streetview_client(cfg: &AuditConfig) -> Result<Box<dyn StreetViewMetaClient>> {
    match cfg.client_mode {
        ClientMode::Fixture => {
            let path = cfg.fixtures()?.join(STREETVIEW_FIXTURE);
            Ok(Box::new(FixtureStreetViewClient::from_json(&read_to_string(&path)?)?))
        }
        ClientMode::Live => live_streetview(),
    }
}

#[cfg(feature = "live")]
fn live_places() -> Result<Box<dyn PlacesClient>> {
    Ok(Box::new(crate::live::GooglePlacesClient::from_env()?))
}

#[cfg(feature = "live")]
fn live_streetview() -> Result<Box<dyn StreetViewMetaClient>> {
    Ok(Box::new(crate::live::StreetViewMetadataClient::from_env()?))
}

#[cfg(feature = "live")]
fn live_vlm(model_id: &str) -> Result<Box<dyn VlmClient>> {
    Ok(Box::new(crate::live::GeminiClient::from_env(model_id)?))
}

#[cfg(not(feature = "live"))]
fn live_unavailable<T>() -> Result<T> {
    Err(Error::Config("live mode needs a build with the `live` feature".into()))
}

#[cfg(not(feature = "live"))]
fn live_places() -> Result<Box<dyn PlacesClient>> {
    live_unavailable()
}

#[cfg(not(feature = "live"))]
fn live_streetview() -> Result<Box<dyn StreetViewMetaClient>> {
    live_unavailable()
}

#[cfg(not(feature = "live"))]
fn live_vlm(_model_id: &str) -> Result<Box<dyn VlmClient>> {
    live_unavailable()
}

pub fn pois_stage(cfg: &AuditConfig, out: &Path) -> Result<()> {
    let sectors = load_sectors(cfg)?;
    let taxonomy = match &cfg.poi_taxonomy {
        Some(p) => PoiTaxonomy::from_json(&read_to_string(p)?)?,
        None => PoiTaxonomy::builtin(),
    };
    let targets: Vec<&ZonePolygon> = if cfg.audit_sectors.is_empty() {
        sectors.iter().collect()
    } else {
        cfg.audit_sectors
            .iter()
            .map(|id| {
                sectors
                    .iter()
                    .find(|s| &s.id == id)
                    .ok_or_else(|| Error::NotFound(format!("sector {id}")))
            })
            .collect::<Result<_>>()?
    };
    let mut queries = Vec::new();
    for s in &targets {
        for p in sample_points(s, cfg.sample_spacing_m)? {
            queries.push(PlacesQuery::new(p, cfg.query_radius_m)?);
        }
    }
    log::info!("{} sample points over {} sectors", queries.len(), targets.len());
    let client = places_client(cfg)?;
    let fetched = fetch_all(client.as_ref(), &queries, &cfg.fetch_options())?;
    let fetched_count = fetched.len();
    let mut pois: Vec<PoiRecord> = dedup(fetched).into_iter().map(|p| categorize(p, &taxonomy)).collect();
    assign_sectors(&mut pois, &sectors);
    log::info!("{fetched_count} places fetched, {} after deduplication", pois.len());
    write_artifact(out, POIS_FILE, &write_pois_csv(&pois)?)?;

    let ids: Vec<&str> = sectors.iter().map(|s| s.id.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["category", "sector", "count"])?;
    for (cat, counts) in category_table(&pois, &ids) {
        for (sector, n) in &counts.per_sector {
            w.write_record([cat.as_str(), sector, &n.to_string()])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(CATEGORY_COUNTS_FILE, e.into_error()))?;
    write_artifact(out, CATEGORY_COUNTS_FILE, &String::from_utf8(bytes).expect("utf-8"))?;
    println!(
        "{}",
        serde_json::json!({"stage": "pois", "queries": queries.len(), "pois": pois.len()})
    );
    Ok(())
}

pub fn trace_stage(cfg: &AuditConfig, out: &Path) -> Result<()> {
    let net = load_net(cfg)?;
    let pois = load_pois(out)?;
    let pool = worker_pool(cfg)?;
    let traces: Vec<PoiTrace> = pool.install(|| {
        pois.par_iter()
            .map(|p| -> Result<PoiTrace> {
                match cfg.aggregation {
                    Aggregation::Network => {
                        let origin = nearest_node(&net, &p.location)?;
                        let set = trace_paths(&net, origin, cfg.trace_budget_m)?;
                        Ok(PoiTrace {
                            poi_id: p.provider_id.clone(),
                            origin: Some(origin),
                            budget_m: cfg.trace_budget_m,
                            edges: set.edges.into_iter().collect(),
                        })
                    }
                    Aggregation::Buffer => Ok(PoiTrace {
                        poi_id: p.provider_id.clone(),
                        origin: None,
                        budget_m: cfg.trace_budget_m,
                        edges: segments_within_buffer(&net, &p.location, cfg.trace_budget_m),
                    }),
                }
            })
            .collect::<Result<_>>()
    })?;
    let mut features = Vec::new();
    for t in &traces {
        for id in &t.edges {
            let e = net.edge(*id).expect("traced edges come from the network");
            let mut props = serde_json::Map::new();
            props.insert("poi_id".into(), t.poi_id.clone().into());
            props.insert("edge_id".into(), id.0.into());
            props.insert("road_type".into(), e.road_type.as_str().into());
            features.push(crate::road_graph::feature(e.geometry.to_geojson_geometry(), props));
        }
    }
    write_artifact(out, TRACES_FILE, &to_json(&traces)?)?;
    write_artifact(out, TRACES_GEOJSON_FILE, &to_json(&collection(features))?)?;
    println!("{}", serde_json::json!({"stage": "trace", "pois": traces.len()}));
    Ok(())
}

pub fn coverage_stage(cfg: &AuditConfig, out: &Path) -> Result<()> {
    let net = load_net(cfg)?;
    let pois = load_pois(out)?;
    let traces: Vec<PoiTrace> = read_json(&out.join(TRACES_FILE))?;
    let by_id: BTreeMap<&str, &PoiTrace> = traces.iter().map(|t| (t.poi_id.as_str(), t)).collect();
    let client = streetview_client(cfg)?;
    let band = cfg.cell_band();
    let pool = worker_pool(cfg)?;
    let results: Vec<(PoiCoverage, Vec<geojson::Feature>)> = pool.install(|| {
        pois.par_iter()
            .map(|p| -> Result<(PoiCoverage, Vec<geojson::Feature>)> {
                let trace = by_id
                    .get(p.provider_id.as_str())
                    .ok_or_else(|| Error::NotFound(format!("trace for poi {}", p.provider_id)))?;
                let map = build_coverage(
                    client.as_ref(),
                    &p.provider_id,
                    &p.location,
                    cfg.coverage_radius(),
                    cfg.cell_size_m,
                    &band,
                )?;
                let segments = trace
                    .edges
                    .iter()
                    .map(|id| {
                        net.edge(*id)
                            .map(|e| (*id, &e.geometry))
                            .ok_or_else(|| Error::NotFound(format!("segment {id}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let verdicts = filter_segments(segments, &map, cfg.coverage_threshold)?;
                Ok((
                    PoiCoverage {
                        poi_id: p.provider_id.clone(),
                        covered_cells: map.covered_count(),
                        total_cells: map.mask.grid.cell_count(),
                        verdicts,
                    },
                    map.to_geojson().features,
                ))
            })
            .collect::<Result<_>>()
    })?;
    let (coverage, cells): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let retained: usize = coverage
        .iter()
        .map(|c| c.verdicts.iter().filter(|v| v.retained).count())
        .sum();
    write_artifact(out, COVERAGE_FILE, &to_json(&coverage)?)?;
    write_artifact(
        out,
        COVERAGE_GEOJSON_FILE,
        &to_json(&collection(cells.into_iter().flatten().collect()))?,
    )?;
    println!(
        "{}",
        serde_json::json!({"stage": "coverage", "pois": coverage.len(), "retained_segments": retained})
    );
    Ok(())
}

pub fn score_stage(cfg: &AuditConfig, out: &Path) -> Result<ScoreSummary> {
    let net = load_net(cfg)?;
    let sectors = load_sectors(cfg)?;
    let taxonomy = load_label_taxonomy(cfg)?;
    let parsed = parse_labels(&read_to_string(cfg.require("labels", &cfg.labels)?)?, &taxonomy)?;
    if let Some(first) = parsed.rejected.first() {
        if cfg.strict_labels {
            return Err(Error::schema(format!("line {}", first.line), first.message.clone()));
        }
        for r in &parsed.rejected {
            log::warn!("label {r}");
        }
    }
    let pois = load_pois(out)?;
    let coverage: Vec<PoiCoverage> = read_json(&out.join(COVERAGE_FILE))?;
    let by_id: BTreeMap<&str, &PoiCoverage> = coverage.iter().map(|c| (c.poi_id.as_str(), c)).collect();
    let mut inputs = Vec::with_capacity(pois.len());
    for p in &pois {
        let cov = by_id
            .get(p.provider_id.as_str())
            .ok_or_else(|| Error::NotFound(format!("coverage for poi {}", p.provider_id)))?;
        let sector = match &p.sector_id {
            Some(id) => Some(
                sectors
                    .iter()
                    .find(|s| &s.id == id)
                    .ok_or_else(|| Error::NotFound(format!("sector {id}")))?,
            ),
            None => None,
        };
        let retained = cov.verdicts.iter().filter(|v| v.retained).map(|v| v.segment_id);
        inputs.push(PoiSegments {
            poi_id: p.provider_id.clone(),
            category: p.category,
            sector_id: p.sector_id.clone(),
            segments: select_segments(&net, retained, sector)?,
        });
    }
    let scores = compute_scores(&parsed.labels, &inputs)?;
    let found = findings(&parsed.labels, cfg.findings_min_severity);
    write_artifact(out, SCORES_FILE, &to_json(&scores)?)?;
    write_artifact(out, HEATMAP_FILE, &to_json(&heatmap_geojson(&scores, &net)?)?)?;
    write_artifact(out, SUMMARY_FILE, &summary_csv(&scores)?)?;
    write_artifact(out, FINDINGS_FILE, &to_json(&found)?)?;
    let summary = ScoreSummary {
        segments: scores.segments.len(),
        pois: scores.pois.len(),
        unscored_pois: scores.unscored_pois.len(),
        findings: found.count,
    };
    println!("{}", serde_json::json!({"stage": "score", "summary": summary}));
    Ok(summary)
}

pub fn guidance_stage(cfg: &AuditConfig, args: &GuidanceArgs, out: &Path) -> Result<()> {
    let net = load_net(cfg)?;
    let taxonomy = load_label_taxonomy(cfg)?;
    let events_path = match &args.events {
        Some(p) => p.clone(),
        None => cfg.require("events", &cfg.events)?.to_path_buf(),
    };
    let events = parse_events(&read_to_string(&events_path)?)?;
    let streetview = streetview_client(cfg)?;
    let client: Box<dyn VlmClient> = if args.live {
        live_vlm(&cfg.model_id)?
    } else {
        Box::new(MockVlmClient::road_aware())
    };
    let mut session = Session::for_network(&net);
    let mut guide = Guide::new(client.as_ref(), &taxonomy);
    let mut log_lines = String::new();
    let mut triggered = 0usize;
    for ev in &events {
        if !session.should_trigger(ev)? {
            continue;
        }
        triggered += 1;
        let msg = match request_for_segment(&net, streetview.as_ref(), ev.segment_id) {
            Ok(req) => guide.generate(&req),
            Err(e) => {
                log::warn!("segment {}: {e}; using fallback guidance", ev.segment_id);
                let road = net
                    .edge(ev.segment_id)
                    .expect("session validated the segment")
                    .road_type;
                guide.degraded(ev.segment_id, road)
            }
        };
        log_lines.push_str(&msg.log_line());
        log_lines.push('\n');
    }
    write_artifact(out, GUIDANCE_FILE, &log_lines)?;
    println!(
        "{}",
        serde_json::json!({"stage": "guidance", "events": events.len(), "triggered": triggered, "segments": guide.cached()})
    );
    Ok(())
}

pub fn rate(args: &RateArgs, out: &Path) -> Result<()> {
    let matrix = parse_ratings_csv(&read_to_string(&args.ratings)?)?;
    let report = rating_report(&matrix)?;
    write_artifact(out, DESCRIPTIVE_FILE, &descriptive_csv(&report)?)?;
    write_artifact(out, AGREEMENT_FILE, &agreement_csv(&report)?)?;
    println!(
        "{}",
        serde_json::json!({"stage": "rate", "raters": matrix.raters().len(), "items": matrix.items().len()})
    );
    Ok(())
}

pub fn sectors_stage(cfg: &AuditConfig, args: &SectorArgs, out: &Path) -> Result<()> {
    let category: PoiCategory = args.category.parse()?;
    let counts = match &args.counts {
        Some(p) => SectorCounts::from_csv(&read_to_string(p)?)?,
        None => {
            let sectors = load_sectors(cfg)?;
            let ids: Vec<&str> = sectors.iter().map(|s| s.id.as_str()).collect();
            crate::poi_pipeline::count_by_category(&load_pois(out)?, category, &ids)
        }
    };
    let selected = counts
        .argmax()
        .map(|(s, n)| serde_json::json!({"sector": s, "count": n}));
    let allocation = match &cfg.wards {
        Some(w) => {
            let wards = load_zones(&read_to_string(w)?)?;
            Some(allocate_population(&wards, &load_sectors(cfg)?)?)
        }
        None => None,
    };
    let report = serde_json::json!({
        "category": category.as_str(),
        "counts": counts,
        "selected": selected,
        "population": allocation,
    });
    write_artifact(out, SECTOR_SELECTION_FILE, &to_json(&report)?)?;
    println!("{}", serde_json::json!({"stage": "sectors", "selected": selected}));
    Ok(())
}
