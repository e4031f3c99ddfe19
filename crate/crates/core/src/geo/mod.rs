//! Geometry primitives shared by every pipeline stage.
//!
//! Distances use a spherical earth of radius [`EARTH_RADIUS_M`]. Areas and
//! intersections are computed in a local equirectangular projection
//! ([`LocalProjection`]) which is accurate to well under a percent at city
//! scale.

mod grid;
mod zone;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use grid::{
    covered_fraction, make_grid, CellId, CellSizeBand, CoverageMask, Grid, GridCell, Region, SAMPLE_STEP_M,
};
pub use zone::{allocate_population, load_zones, point_in_ring, Allocation, ZonePolygon};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters spanned by one degree of latitude on the sphere.
pub const METERS_PER_DEG_LAT: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// A validated WGS84-style coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate ({lat}, {lon})")));
        }
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("coordinate out of range ({lat}, {lon})")));
        }
        Ok(GeoPoint { lat, lon })
    }

    /// Builds a point from a GeoJSON-ordered `[lon, lat]` position.
    pub fn from_lon_lat(pos: &[f64]) -> Result<Self> {
        match pos {
            [lon, lat, ..] => GeoPoint::new(*lat, *lon),
            _ => Err(Error::invalid("position needs at least two coordinates")),
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn to_lon_lat(&self) -> Vec<f64> {
        vec![self.lon, self.lat]
    }

    /// Linear interpolation in coordinate space; adequate for the sub-kilometre
    /// spans handled here.
    pub fn lerp(&self, other: &GeoPoint, t: f64) -> GeoPoint {
        GeoPoint {
            lat: self.lat + (other.lat - self.lat) * t,
            lon: self.lon + (other.lon - self.lon) * t,
        }
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Ordered, non-empty list of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GeoPoint>", into = "Vec<GeoPoint>")]
pub struct Polyline {
    points: Vec<GeoPoint>,
}

impl TryFrom<Vec<GeoPoint>> for Polyline {
    type Error = Error;

    fn try_from(points: Vec<GeoPoint>) -> Result<Self> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<GeoPoint> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

impl Polyline {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("polyline needs at least one point"));
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn first(&self) -> &GeoPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &GeoPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    /// Sum of consecutive haversine spans, in meters.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| haversine_distance(&w[0], &w[1])).sum()
    }

    /// Point at arc-length `s` meters from the start, clamped to the ends.
    pub fn point_at(&self, s: f64) -> GeoPoint {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let span = haversine_distance(&w[0], &w[1]);
            if remaining <= span && span > 0.0 {
                return w[0].lerp(&w[1], remaining / span);
            }
            remaining -= span;
        }
        *self.last()
    }

    /// Point halfway along the polyline by arc length.
    pub fn midpoint(&self) -> GeoPoint {
        self.point_at(self.length() / 2.0)
    }

    pub fn to_geojson_geometry(&self) -> geojson::Geometry {
        geojson::Geometry::new(geojson::Value::LineString(
            self.points.iter().map(GeoPoint::to_lon_lat).collect(),
        ))
    }
}

pub fn polyline_length(p: &Polyline) -> f64 {
    p.length()
}

/// Equirectangular projection to local meters around a fixed origin.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    origin: GeoPoint,
    m_per_deg_lon: f64,
}

impl LocalProjection {
    pub fn new(origin: GeoPoint) -> Self {
        LocalProjection {
            origin,
            m_per_deg_lon: METERS_PER_DEG_LAT * origin.lat.to_radians().cos(),
        }
    }

    /// Anchors the projection at the mean of `points`.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let origin = GeoPoint::new(lat / n as f64, lon / n as f64).ok()?;
        Some(LocalProjection::new(origin))
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn to_xy(&self, p: &GeoPoint) -> (f64, f64) {
        (
            (p.lon - self.origin.lon) * self.m_per_deg_lon,
            (p.lat - self.origin.lat) * METERS_PER_DEG_LAT,
        )
    }

    pub fn from_xy(&self, x: f64, y: f64) -> Result<GeoPoint> {
        GeoPoint::new(
            self.origin.lat + y / METERS_PER_DEG_LAT,
            self.origin.lon + x / self.m_per_deg_lon,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_identity() {
        assert_eq!(haversine_distance(&pt(10.0, 20.0), &pt(10.0, 20.0)), 0.0);
    }

    #[test]
    fn haversine_one_degree_on_equator() {
        // 2πR/360 with R = 6,371,000 m.
        let d = haversine_distance(&pt(0.0, 0.0), &pt(0.0, 1.0));
        assert!((d - 111_194.93).abs() < 1.0, "{d}");
    }

    #[test]
    fn rejects_non_finite_and_out_of_range() {
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat": 95.0, "lon": 0.0}"#).is_err());
    }

    #[test]
    fn polyline_lengths() {
        assert!(Polyline::new(vec![]).is_err());
        let single = Polyline::new(vec![pt(0.0, 0.0)]).unwrap();
        assert_eq!(polyline_length(&single), 0.0);
        let two = Polyline::new(vec![pt(0.0, 0.0), pt(0.0, 1.0)]).unwrap();
        assert!((two.length() - 111_194.93).abs() < 1.0);
        let three = Polyline::new(vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(0.0, 2.0)]).unwrap();
        assert!((three.length() - 2.0 * 111_194.93).abs() < 2.0);
    }

    #[test]
    fn point_at_walks_the_line() {
        let line = Polyline::new(vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(1.0, 1.0)]).unwrap();
        let span = haversine_distance(&pt(0.0, 0.0), &pt(0.0, 1.0));
        let p = line.point_at(span / 2.0);
        assert!((p.lon() - 0.5).abs() < 1e-9 && p.lat().abs() < 1e-12);
        assert_eq!(line.point_at(1e9), pt(1.0, 1.0));
        assert_eq!(line.point_at(-5.0), pt(0.0, 0.0));
    }

    #[test]
    fn projection_round_trip() {
        let proj = LocalProjection::new(pt(30.73, 76.78));
        let p = pt(30.7345, 76.7712);
        let (x, y) = proj.to_xy(&p);
        let back = proj.from_xy(x, y).unwrap();
        assert!((back.lat() - p.lat()).abs() < 1e-12);
        assert!((back.lon() - p.lon()).abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(lat, lon)| pt(lat, lon))
    }

    fn arb_city_point() -> impl Strategy<Value = GeoPoint> {
        (30.6f64..30.8, 76.7f64..76.9).prop_map(|(lat, lon)| pt(lat, lon))
    }

    proptest! {
        #[test]
        fn haversine_metric_axioms(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = haversine_distance(&a, &b);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, haversine_distance(&b, &a));
            prop_assert_eq!(ab == 0.0, a == b);
            let ac = haversine_distance(&a, &c);
            let cb = haversine_distance(&c, &b);
            prop_assert!(ab <= (ac + cb) * (1.0 + 1e-6) + 1e-9);
        }

        #[test]
        fn polyline_length_reversal_invariant(points in proptest::collection::vec(arb_city_point(), 1..12)) {
            let line = Polyline::new(points).unwrap();
            let fwd = line.length();
            let back = line.reversed().length();
            prop_assert!((fwd - back).abs() <= 1e-9 * fwd.max(1.0));
        }
    }
}
