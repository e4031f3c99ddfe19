//! Key-value audit configuration with `--set` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coverage::{DEFAULT_CELL_SIZE_M, DEFAULT_COVERAGE_THRESHOLD};
use crate::geo::CellSizeBand;
use crate::poi_pipeline::{FetchOptions, DEFAULT_QUERY_RADIUS_M, DEFAULT_SAMPLE_SPACING_M};
use crate::road_graph::DEFAULT_TRACE_BUDGET_M;
use crate::scoring::DEFAULT_FINDINGS_SEVERITY;
use crate::{Error, Result};

/// Largest radius the places provider accepts.
const MAX_QUERY_RADIUS_M: f64 = 50_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientMode {
    Fixture,
    Live,
}

/// Which segments count as "near" a POI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Edges reached within the walking budget along the network.
    Network,
    /// Edges whose midpoint is within the budget in a straight line.
    Buffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub network: Option<PathBuf>,
    pub sectors: Option<PathBuf>,
    pub wards: Option<PathBuf>,
    pub label_taxonomy: Option<PathBuf>,
    pub poi_taxonomy: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub fixtures_dir: Option<PathBuf>,
    /// Sector ids to sample for POIs; empty means every sector.
    pub audit_sectors: Vec<String>,
    pub query_radius_m: f64,
    pub sample_spacing_m: f64,
    pub trace_budget_m: f64,
    /// Half-side of the coverage square; defaults to the trace budget.
    pub coverage_radius_m: Option<f64>,
    pub cell_size_m: f64,
    pub cell_size_min_m: f64,
    pub cell_size_max_m: f64,
    pub coverage_threshold: f64,
    pub findings_min_severity: u8,
    pub client_mode: ClientMode,
    pub aggregation: Aggregation,
    pub workers: usize,
    pub requests_per_second: f64,
    pub max_retries: u32,
    pub model_id: String,
    /// Reject the whole label file when any row is invalid.
    pub strict_labels: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let band = CellSizeBand::default();
        let fetch = FetchOptions::default();
        AuditConfig {
            network: None,
            sectors: None,
            wards: None,
            label_taxonomy: None,
            poi_taxonomy: None,
            labels: None,
            events: None,
            fixtures_dir: None,
            audit_sectors: Vec::new(),
            query_radius_m: DEFAULT_QUERY_RADIUS_M,
            sample_spacing_m: DEFAULT_SAMPLE_SPACING_M,
            trace_budget_m: DEFAULT_TRACE_BUDGET_M,
            coverage_radius_m: None,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            cell_size_min_m: band.min_m,
            cell_size_max_m: band.max_m,
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            findings_min_severity: DEFAULT_FINDINGS_SEVERITY,
            client_mode: ClientMode::Fixture,
            aggregation: Aggregation::Network,
            workers: fetch.workers,
            requests_per_second: fetch.requests_per_second,
            max_retries: fetch.max_retries,
            model_id: crate::guidance::DEFAULT_MODEL_ID.to_string(),
            strict_labels: true,
        }
    }
}

fn parse_override(raw: &str) -> Result<(String, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {raw:?} is not key=value")))?;
    let key = key.trim().to_string();
    let value = value.trim();
    // Bare words that are not valid TOML values are taken as strings.
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

impl AuditConfig {
    /// Parses `text` with `overrides` applied on top. Relative paths resolve
    /// against `base_dir`.
    pub fn from_toml(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::schema("config", e.message().to_string()))?;
        for raw in overrides {
            let (k, v) = parse_override(raw)?;
            table.insert(k, v);
        }
        let mut cfg: AuditConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::schema("config", e.message().to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text = crate::error::read_to_string(p)?;
                let base = p.parent().unwrap_or(Path::new("."));
                AuditConfig::from_toml(&text, overrides, base)
            }
            None => AuditConfig::from_toml("", overrides, Path::new(".")),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.network,
            &mut self.sectors,
            &mut self.wards,
            &mut self.label_taxonomy,
            &mut self.poi_taxonomy,
            &mut self.labels,
            &mut self.events,
            &mut self.fixtures_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("query_radius_m", self.query_radius_m)?;
        if self.query_radius_m > MAX_QUERY_RADIUS_M {
            return Err(Error::Config(format!("query_radius_m exceeds {MAX_QUERY_RADIUS_M}")));
        }
        positive("sample_spacing_m", self.sample_spacing_m)?;
        positive("trace_budget_m", self.trace_budget_m)?;
        positive("coverage_radius_m", self.coverage_radius())?;
        positive("requests_per_second", self.requests_per_second)?;
        if !(self.cell_size_min_m > 0.0 && self.cell_size_min_m <= self.cell_size_max_m) {
            return Err(Error::Config("cell size band is empty".into()));
        }
        self.cell_band().check(self.cell_size_m)?;
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return Err(Error::Config(format!(
                "coverage_threshold {} outside [0, 1]",
                self.coverage_threshold
            )));
        }
        if !(1..=3).contains(&self.findings_min_severity) {
            return Err(Error::Config(format!(
                "findings_min_severity {} outside 1..=3",
                self.findings_min_severity
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(Error::Config("model_id is empty".into()));
        }
        Ok(())
    }

    pub fn coverage_radius(&self) -> f64 {
        self.coverage_radius_m.unwrap_or(self.trace_budget_m)
    }

    pub fn cell_band(&self) -> CellSizeBand {
        CellSizeBand {
            min_m: self.cell_size_min_m,
            max_m: self.cell_size_max_m,
        }
    }

    pub fn fetch_options(&self) -> FetchOptions {
        FetchOptions {
            workers: self.workers,
            requests_per_second: self.requests_per_second,
            max_retries: self.max_retries,
        }
    }

    /// A configured input path, or a config error naming the missing key.
    pub fn require<'a>(&self, key: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{key}` is not set in the config")))
    }

    /// Fixture directory; fixture mode cannot run without one.
    pub fn fixtures(&self) -> Result<&Path> {
        self.require("fixtures_dir", &self.fixtures_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = AuditConfig::from_toml("", &[], Path::new(".")).unwrap();
        assert_eq!(c.query_radius_m, 400.0);
        assert_eq!(c.trace_budget_m, 1000.0);
        assert_eq!(c.cell_size_m, 70.0);
        assert_eq!(c.coverage_threshold, 0.75);
        assert_eq!(c.findings_min_severity, 2);
        assert_eq!(c.client_mode, ClientMode::Fixture);
        assert_eq!(c.coverage_radius(), 1000.0);
        assert!(c.fixtures().is_err());
    }

    #[test]
    fn overrides_and_paths() {
        let text = "network = \"net.geojson\"\ncell_size_m = 65\n";
        let c = AuditConfig::from_toml(
            text,
            &[
                "trace_budget_m=250".into(),
                "aggregation=buffer".into(),
                "model_id = m-1".into(),
            ],
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(c.network.as_deref(), Some(Path::new("/data/net.geojson")));
        assert_eq!(c.cell_size_m, 65.0);
        assert_eq!(c.trace_budget_m, 250.0);
        assert_eq!(c.aggregation, Aggregation::Buffer);
        assert_eq!(c.model_id, "m-1");
    }

    #[test]
    fn rejects_out_of_band_values() {
        let base = Path::new(".");
        assert!(matches!(
            AuditConfig::from_toml("cell_size_m = 90", &[], base),
            Err(Error::Config(_))
        ));
        assert!(AuditConfig::from_toml("coverage_threshold = 1.2", &[], base).is_err());
        assert!(AuditConfig::from_toml("findings_min_severity = 4", &[], base).is_err());
        assert!(AuditConfig::from_toml("workers = 0", &[], base).is_err());
        assert!(matches!(
            AuditConfig::from_toml("colour = 1", &[], base),
            Err(Error::Schema { .. })
        ));
        assert!(AuditConfig::from_toml("", &["nonsense".into()], base).is_err());
    }
}
