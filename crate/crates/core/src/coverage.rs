//! Street-view coverage masks around POIs and the 75% segment filter.
//!
//! A cell counts as covered when the metadata client reports a panorama
//! inside the cell's circumradius (`cell_size / √2`) of its centroid. The
//! covered cells are kept as a mask rather than merged into a polygon; the
//! segment test only needs membership.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geo::{
    covered_fraction, haversine_distance, CellSizeBand, CoverageMask, GeoPoint, Grid, GridCell, Polyline, Region,
};
use crate::road_graph::{collection, feature, EdgeId};
use crate::{Error, Result};

pub const DEFAULT_COVERAGE_RADIUS_M: f64 = 1000.0;
pub const DEFAULT_CELL_SIZE_M: f64 = 70.0;
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panorama {
    pub pano_id: String,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("street view metadata query failed: {0}")]
pub struct StreetViewError(pub String);

/// Street-level imagery metadata lookup.
pub trait StreetViewMetaClient: Send + Sync {
    /// Nearest panorama to `point`, if the provider has one in range.
    fn query(&self, point: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreetViewFixture {
    /// Provider search radius around each query point.
    #[serde(default = "default_search_radius")]
    pub search_radius_m: f64,
    pub panoramas: Vec<Panorama>,
}

fn default_search_radius() -> f64 {
    50.0
}

/// Answers queries from a recorded panorama catalogue: the nearest
/// panorama within the search radius, ties broken by catalogue order.
#[derive(Debug, Clone)]
pub struct FixtureStreetViewClient {
    fixture: StreetViewFixture,
}

impl FixtureStreetViewClient {
    pub fn new(fixture: StreetViewFixture) -> Self {
        FixtureStreetViewClient { fixture }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fixture: StreetViewFixture =
            serde_json::from_str(text).map_err(|e| Error::schema("street view fixture", e.to_string()))?;
        Ok(FixtureStreetViewClient::new(fixture))
    }
}

impl StreetViewMetaClient for FixtureStreetViewClient {
    fn query(&self, point: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError> {
        let mut best: Option<(&Panorama, f64)> = None;
        for p in &self.fixture.panoramas {
            let d = haversine_distance(point, &p.location);
            if d <= self.fixture.search_radius_m && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((p, d));
            }
        }
        Ok(best.map(|(p, _)| p.clone()))
    }
}

/// Covered-cell mask over the square of side `2 * radius_m` around a POI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub poi_id: String,
    pub radius_m: f64,
    pub mask: CoverageMask,
}

impl CoverageMap {
    pub fn cells(&self) -> Vec<GridCell> {
        self.mask
            .grid
            .cells()
            .into_iter()
            .map(|mut c| {
                c.covered = self.mask.covered.contains(&c.id);
                c
            })
            .collect()
    }

    pub fn covered_count(&self) -> usize {
        self.mask.covered.len()
    }

    /// Covered cells as Polygon features.
    pub fn to_geojson(&self) -> geojson::FeatureCollection {
        let features = self
            .cells()
            .into_iter()
            .filter(|c| c.covered)
            .map(|c| {
                let mut props = serde_json::Map::new();
                props.insert("poi_id".into(), self.poi_id.clone().into());
                props.insert("row".into(), c.id.row.into());
                props.insert("col".into(), c.id.col.into());
                feature(
                    geojson::Geometry::new(geojson::Value::Polygon(vec![c.bounds.ring()])),
                    props,
                )
            })
            .collect();
        collection(features)
    }
}

/// Queries the client at every cell centroid around `poi`. A failed query
/// leaves its cell uncovered.
pub fn build_coverage(
    client: &dyn StreetViewMetaClient,
    poi_id: &str,
    poi: &GeoPoint,
    radius_m: f64,
    cell_size_m: f64,
    band: &CellSizeBand,
) -> Result<CoverageMap> {
    band.check(cell_size_m)?;
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(Error::invalid(format!(
            "coverage radius must be positive, got {radius_m}"
        )));
    }
    let grid = Grid::centered(&Region::around(poi, radius_m)?, cell_size_m)?;
    let reach = cell_size_m / std::f64::consts::SQRT_2;
    let mut covered = BTreeSet::new();
    for cell in grid.cells() {
        let centroid = cell.centroid();
        match client.query(&centroid) {
            Ok(Some(pano)) if haversine_distance(&pano.location, &centroid) <= reach => {
                covered.insert(cell.id);
            }
            Ok(_) => {}
            Err(e) => log::warn!(
                "poi {poi_id} cell ({}, {}): {e}; marking uncovered",
                cell.id.row,
                cell.id.col
            ),
        }
    }
    Ok(CoverageMap {
        poi_id: poi_id.to_string(),
        radius_m,
        mask: CoverageMask { grid, covered },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageVerdict {
    pub segment_id: EdgeId,
    pub fraction: f64,
    pub retained: bool,
}

/// Scores each segment's covered fraction; `retained` holds when the
/// fraction is at least `threshold`.
pub fn filter_segments<'a>(
    segments: impl IntoIterator<Item = (EdgeId, &'a Polyline)>,
    cov: &CoverageMap,
    threshold: f64,
) -> Result<Vec<CoverageVerdict>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("coverage threshold {threshold} outside [0, 1]")));
    }
    Ok(segments
        .into_iter()
        .map(|(segment_id, geometry)| {
            let fraction = covered_fraction(geometry, &cov.mask);
            CoverageVerdict {
                segment_id,
                fraction,
                retained: fraction >= threshold,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{CellId, LocalProjection};

    fn proj() -> LocalProjection {
        LocalProjection::new(GeoPoint::new(30.7333, 76.7794).unwrap())
    }

    struct Everywhere;

    impl StreetViewMetaClient for Everywhere {
        fn query(&self, p: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError> {
            Ok(Some(Panorama {
                pano_id: "x".into(),
                location: *p,
            }))
        }
    }

    struct Nowhere;

    impl StreetViewMetaClient for Nowhere {
        fn query(&self, _: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError> {
            Ok(None)
        }
    }

    struct Broken;

    impl StreetViewMetaClient for Broken {
        fn query(&self, _: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError> {
            Err(StreetViewError("timeout".into()))
        }
    }

    #[test]
    fn saturated_and_empty_coverage() {
        let o = proj().origin();
        let band = CellSizeBand::default();
        let full = build_coverage(&Everywhere, "p", &o, 1000.0, 70.0, &band).unwrap();
        assert_eq!(full.mask.grid.cell_count(), 29 * 29);
        assert_eq!(full.covered_count(), 29 * 29);
        let none = build_coverage(&Nowhere, "p", &o, 1000.0, 70.0, &band).unwrap();
        assert_eq!(none.covered_count(), 0);
        let broken = build_coverage(&Broken, "p", &o, 300.0, 70.0, &band).unwrap();
        assert_eq!(broken.covered_count(), 0);
        assert!(build_coverage(&Everywhere, "p", &o, 1000.0, 90.0, &band).is_err());
        assert!(build_coverage(&Everywhere, "p", &o, -1.0, 70.0, &band).is_err());
    }

    #[test]
    fn north_east_quadrant_fixture() {
        // 280 m square around the POI, 70 m cells: a 4 x 4 grid whose cells
        // have centroids at ±35 and ±105 m. Panoramas sit a few meters off
        // the NE centroids only.
        let p = proj();
        let mut panoramas = Vec::new();
        for (i, x) in [35.0, 105.0].iter().enumerate() {
            for (j, y) in [35.0, 105.0].iter().enumerate() {
                panoramas.push(Panorama {
                    pano_id: format!("ne{i}{j}"),
                    location: p.from_xy(x + 3.0, y - 4.0).unwrap(),
                });
            }
        }
        let client = FixtureStreetViewClient::new(StreetViewFixture {
            search_radius_m: 50.0,
            panoramas,
        });
        let map = build_coverage(&client, "poi", &p.origin(), 140.0, 70.0, &CellSizeBand::default()).unwrap();
        assert_eq!((map.mask.grid.rows(), map.mask.grid.cols()), (4, 4));
        let expected: BTreeSet<CellId> = [(2, 2), (2, 3), (3, 2), (3, 3)]
            .iter()
            .map(|(row, col)| CellId { row: *row, col: *col })
            .collect();
        assert_eq!(map.mask.covered, expected);
        assert_eq!(map.to_geojson().features.len(), 4);
    }

    fn boundary_mask(covered_until_m: f64) -> (CoverageMap, Polyline) {
        // Column boundary placed exactly `covered_until_m` along a 100 m line.
        let p = proj();
        let sw = p.from_xy(0.0, -covered_until_m / 2.0).unwrap();
        let ne = p.from_xy(2.0 * covered_until_m, covered_until_m / 2.0).unwrap();
        let region = Region::new(sw.lat(), sw.lon(), ne.lat(), ne.lon()).unwrap();
        let grid = Grid::tiling(&region, covered_until_m).unwrap();
        let mut mask = CoverageMask::new(grid);
        mask.covered.insert(CellId { row: 0, col: 0 });
        let line = Polyline::new(vec![p.from_xy(0.0, 0.0).unwrap(), p.from_xy(100.0, 0.0).unwrap()]).unwrap();
        (
            CoverageMap {
                poi_id: "p".into(),
                radius_m: 100.0,
                mask,
            },
            line,
        )
    }

    #[test]
    fn threshold_is_boundary_inclusive() {
        let (map, line) = boundary_mask(75.0);
        let v = filter_segments([(EdgeId(1), &line)], &map, 0.75).unwrap();
        assert_eq!(v[0].fraction, 0.75);
        assert!(v[0].retained);

        let (map, line) = boundary_mask(74.0);
        let v = filter_segments([(EdgeId(1), &line)], &map, 0.75).unwrap();
        assert_eq!(v[0].fraction, 0.74);
        assert!(!v[0].retained);
    }

    #[test]
    fn half_covered_segment_is_dropped() {
        let (map, line) = boundary_mask(50.0);
        let v = filter_segments([(EdgeId(3), &line)], &map, 0.75).unwrap();
        assert!((v[0].fraction - 0.5).abs() < 0.02);
        assert!(!v[0].retained);
    }

    #[test]
    fn segment_outside_map_is_uncovered() {
        let (map, _) = boundary_mask(75.0);
        let p = proj();
        let far = Polyline::new(vec![p.from_xy(5000.0, 0.0).unwrap(), p.from_xy(5100.0, 0.0).unwrap()]).unwrap();
        let v = filter_segments([(EdgeId(0), &far)], &map, 0.75).unwrap();
        assert_eq!(v[0].fraction, 0.0);
        assert!(filter_segments([(EdgeId(0), &far)], &map, 1.5).is_err());
    }

    #[test]
    fn fixture_client_picks_nearest_in_range() {
        let p = proj();
        let fixture = StreetViewFixture {
            search_radius_m: 50.0,
            panoramas: vec![
                Panorama {
                    pano_id: "a".into(),
                    location: p.from_xy(30.0, 0.0).unwrap(),
                },
                Panorama {
                    pano_id: "b".into(),
                    location: p.from_xy(10.0, 0.0).unwrap(),
                },
            ],
        };
        let c = FixtureStreetViewClient::new(fixture);
        assert_eq!(c.query(&p.origin()).unwrap().unwrap().pano_id, "b");
        assert!(c.query(&p.from_xy(-100.0, 0.0).unwrap()).unwrap().is_none());
    }
}
