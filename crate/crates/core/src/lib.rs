//! Batch toolkit for POI-centric sidewalk accessibility audits.
//!
//! The pipeline runs in file-coupled stages:
//!
//! 1. [`poi_pipeline`] samples query points over a sector, fetches places,
//!    deduplicates them and maps provider types onto ten POI categories.
//! 2. [`road_graph`] loads a pedestrian road network and collects every edge
//!    reachable within a walking budget of each POI.
//! 3. [`coverage`] builds a street-view coverage mask around each POI and keeps
//!    only segments that are at least 75% covered.
//! 4. [`labels`] and [`scoring`] turn crowdsourced accessibility labels into
//!    segment, POI and category scores.
//! 5. [`guidance`] composes per-segment mission guidance prompts for a vision
//!    language model, and [`ratings`] computes the agreement statistics used to
//!    evaluate that guidance.
//!
//! Geometry shared by all stages lives in [`geo`].

pub mod cli;
pub mod coverage;
pub mod error;
pub mod geo;
pub mod guidance;
pub mod labels;
#[cfg(feature = "live")]
pub mod live;
pub mod poi_pipeline;
pub mod ratings;
pub mod road_graph;
pub mod scoring;

pub use error::{Error, Result};
