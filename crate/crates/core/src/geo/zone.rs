use std::collections::BTreeMap;

use geo::{Area, BooleanOps};
use serde::{Deserialize, Serialize};

use super::{GeoPoint, LocalProjection, Region};
use crate::{Error, Result};

/// A named polygon (ward or sector) with optional population and land use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePolygon {
    pub id: String,
    ring: Vec<GeoPoint>,
    pub population: Option<f64>,
    pub land_use: Option<String>,
}

impl ZonePolygon {
    /// Validates that the ring is closed, has at least three distinct
    /// vertices and does not cross itself.
    pub fn new(id: impl Into<String>, ring: Vec<GeoPoint>) -> Result<Self> {
        let id = id.into();
        if ring.len() < 4 {
            return Err(Error::invalid(format!("zone {id}: ring needs at least 4 positions")));
        }
        if ring.first() != ring.last() {
            return Err(Error::invalid(format!("zone {id}: ring is not closed")));
        }
        let zone = ZonePolygon {
            id,
            ring,
            population: None,
            land_use: None,
        };
        if zone.self_intersects() {
            return Err(Error::invalid(format!("zone {}: ring self-intersects", zone.id)));
        }
        Ok(zone)
    }

    /// Axis-aligned rectangle zone; handy for fixtures and tests.
    pub fn rectangle(id: impl Into<String>, region: &Region) -> Result<Self> {
        let ring = region
            .ring()
            .iter()
            .map(|p| GeoPoint::from_lon_lat(p))
            .collect::<Result<Vec<_>>>()?;
        ZonePolygon::new(id, ring)
    }

    pub fn with_population(mut self, population: f64) -> Self {
        self.population = Some(population);
        self
    }

    pub fn ring(&self) -> &[GeoPoint] {
        &self.ring
    }

    pub fn bounds(&self) -> Region {
        // A validated ring always has a non-degenerate box unless all points
        // are collinear along a meridian or parallel, which area() rejects.
        Region::bounding(self.ring.iter()).unwrap_or(Region {
            south: self.ring[0].lat(),
            west: self.ring[0].lon(),
            north: self.ring[0].lat(),
            east: self.ring[0].lon(),
        })
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        point_in_ring(p, &self.ring)
    }

    /// Planar area in square meters under `proj`.
    pub fn area_m2(&self, proj: &LocalProjection) -> f64 {
        let xy: Vec<(f64, f64)> = self.ring.iter().map(|p| proj.to_xy(p)).collect();
        let twice: f64 = xy.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum();
        twice.abs() / 2.0
    }

    /// Area-weighted centroid; falls back to the vertex mean for slivers.
    pub fn centroid(&self) -> GeoPoint {
        let proj = LocalProjection::centered_on(self.ring.iter()).expect("ring is non-empty");
        let xy: Vec<(f64, f64)> = self.ring.iter().map(|p| proj.to_xy(p)).collect();
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for w in xy.windows(2) {
            let cross = w[0].0 * w[1].1 - w[1].0 * w[0].1;
            a += cross;
            cx += (w[0].0 + w[1].0) * cross;
            cy += (w[0].1 + w[1].1) * cross;
        }
        if a.abs() < 1e-9 {
            return proj.origin();
        }
        proj.from_xy(cx / (3.0 * a), cy / (3.0 * a)).unwrap_or(proj.origin())
    }

    fn to_geo_polygon(&self, proj: &LocalProjection) -> geo::Polygon<f64> {
        let coords: Vec<(f64, f64)> = self.ring.iter().map(|p| proj.to_xy(p)).collect();
        geo::Polygon::new(geo::LineString::from(coords), vec![])
    }

    fn self_intersects(&self) -> bool {
        let n = self.ring.len() - 1;
        let seg = |i: usize| {
            (
                (self.ring[i].lon(), self.ring[i].lat()),
                (self.ring[i + 1].lon(), self.ring[i + 1].lat()),
            )
        };
        for i in 0..n {
            for j in (i + 1)..n {
                // Adjacent edges share a vertex by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }

    pub fn to_feature(&self) -> geojson::Feature {
        let mut props = serde_json::Map::new();
        props.insert("name".into(), self.id.clone().into());
        if let Some(p) = self.population {
            props.insert("population".into(), p.into());
        }
        geojson::Feature {
            bbox: None,
            geometry: Some(geojson::Geometry::new(geojson::Value::Polygon(vec![self
                .ring
                .iter()
                .map(GeoPoint::to_lon_lat)
                .collect()]))),
            id: None,
            properties: Some(props),
            foreign_members: None,
        }
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Even-odd ray casting in coordinate space.
pub fn point_in_ring(p: &GeoPoint, ring: &[GeoPoint]) -> bool {
    let (x, y) = (p.lon(), p.lat());
    let mut inside = false;
    for w in ring.windows(2) {
        let (xi, yi) = (w[0].lon(), w[0].lat());
        let (xj, yj) = (w[1].lon(), w[1].lat());
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}

/// Reads Polygon features from a GeoJSON FeatureCollection.
///
/// The zone id comes from the `name` property, then `id`, then the feature
/// id; population comes from the numeric `population` property.
pub fn load_zones(text: &str) -> Result<Vec<ZonePolygon>> {
    let gj: geojson::GeoJson = text.parse()?;
    let fc = match gj {
        geojson::GeoJson::FeatureCollection(fc) => fc,
        _ => return Err(Error::GeoJson("expected a FeatureCollection".into())),
    };
    let mut zones = Vec::new();
    for (i, f) in fc.features.iter().enumerate() {
        let props = f.properties.clone().unwrap_or_default();
        let id = props
            .get("name")
            .or_else(|| props.get("id"))
            .map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()))
            .or_else(|| {
                f.id.as_ref().map(|fid| match fid {
                    geojson::feature::Id::String(s) => s.clone(),
                    geojson::feature::Id::Number(n) => n.to_string(),
                })
            })
            .unwrap_or_else(|| format!("zone-{i}"));
        let Some(geom) = &f.geometry else {
            return Err(Error::schema(format!("feature {i}"), "missing geometry"));
        };
        let ring = match &geom.value {
            geojson::Value::Polygon(rings) if !rings.is_empty() => &rings[0],
            _ => return Err(Error::schema(format!("feature {i} ({id})"), "expected a Polygon")),
        };
        let ring = ring
            .iter()
            .map(|pos| GeoPoint::from_lon_lat(pos))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::schema(format!("feature {i} ({id})"), e.to_string()))?;
        let mut zone = ZonePolygon::new(id.clone(), ring)
            .map_err(|e| Error::schema(format!("feature {i} ({id})"), e.to_string()))?;
        zone.population = match props.get("population") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(v.as_f64().filter(|p| *p >= 0.0).ok_or_else(|| {
                Error::schema(
                    format!("feature {i} ({id})"),
                    "population must be a non-negative number",
                )
            })?),
        };
        zone.land_use = props.get("land_use").and_then(|v| v.as_str()).map(str::to_string);
        zones.push(zone);
    }
    Ok(zones)
}

/// Population per sector after spreading each ward uniformly over its area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub by_sector: BTreeMap<String, f64>,
    /// Population falling outside every sector, per ward.
    pub dropped_by_ward: BTreeMap<String, f64>,
    pub total_population: f64,
}

impl Allocation {
    pub fn dropped(&self) -> f64 {
        self.dropped_by_ward.values().sum()
    }

    pub fn allocated(&self) -> f64 {
        self.by_sector.values().sum()
    }

    /// Sector with the largest allocated population; ties go to the first id.
    pub fn most_populous(&self) -> Option<(&str, f64)> {
        self.by_sector
            .iter()
            .fold(None, |best: Option<(&str, f64)>, (k, v)| match best {
                Some((_, bv)) if bv >= *v => best,
                _ => Some((k.as_str(), *v)),
            })
    }
}

/// Splits each ward's population across sectors in proportion to the planar
/// intersection area. Areas use one projection anchored at the mean of all
/// vertices. Overlapping sectors are scaled down so a ward never hands out
/// more than its population.
pub fn allocate_population(wards: &[ZonePolygon], sectors: &[ZonePolygon]) -> Result<Allocation> {
    let proj = LocalProjection::centered_on(wards.iter().chain(sectors).flat_map(|z| z.ring.iter()))
        .ok_or_else(|| Error::invalid("no ward or sector geometry"))?;
    let sector_polys: Vec<_> = sectors.iter().map(|s| s.to_geo_polygon(&proj)).collect();
    let mut by_sector: BTreeMap<String, f64> = sectors.iter().map(|s| (s.id.clone(), 0.0)).collect();
    let mut dropped_by_ward = BTreeMap::new();
    let mut total = 0.0;

    for ward in wards {
        let pop = ward
            .population
            .ok_or_else(|| Error::invalid(format!("ward {} has no population", ward.id)))?;
        let ward_area = ward.area_m2(&proj);
        if ward_area <= 0.0 {
            return Err(Error::invalid(format!("ward {} has zero area", ward.id)));
        }
        let ward_poly = ward.to_geo_polygon(&proj);
        let overlaps: Vec<f64> = sector_polys
            .iter()
            .map(|sp| ward_poly.intersection(sp).unsigned_area())
            .collect();
        let overlap_sum: f64 = overlaps.iter().sum();
        let scale = if overlap_sum > ward_area {
            ward_area / overlap_sum
        } else {
            1.0
        };
        let mut given = 0.0;
        for (sector, overlap) in sectors.iter().zip(&overlaps) {
            let share = pop * (overlap * scale / ward_area).min(1.0);
            *by_sector.get_mut(&sector.id).expect("seeded above") += share;
            given += share;
        }
        dropped_by_ward.insert(ward.id.clone(), (pop - given).max(0.0));
        total += pop;
    }
    Ok(Allocation {
        by_sector,
        dropped_by_ward,
        total_population: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proj() -> LocalProjection {
        LocalProjection::new(GeoPoint::new(30.7333, 76.7794).unwrap())
    }

    fn rect(id: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> ZonePolygon {
        let p = proj();
        let ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
            .iter()
            .map(|(x, y)| p.from_xy(*x, *y).unwrap())
            .collect();
        ZonePolygon::new(id, ring).unwrap()
    }

    #[test]
    fn validation() {
        let p = proj();
        let a = p.from_xy(0.0, 0.0).unwrap();
        let b = p.from_xy(100.0, 0.0).unwrap();
        let c = p.from_xy(100.0, 100.0).unwrap();
        let d = p.from_xy(0.0, 100.0).unwrap();
        assert!(ZonePolygon::new("open", vec![a, b, c, d]).is_err());
        assert!(ZonePolygon::new("short", vec![a, b, a]).is_err());
        // Bow tie crosses itself.
        assert!(ZonePolygon::new("bowtie", vec![a, c, b, d, a]).is_err());
        assert!(ZonePolygon::new("ok", vec![a, b, c, d, a]).is_ok());
    }

    #[test]
    fn containment_and_area() {
        let z = rect("z", 0.0, 0.0, 200.0, 100.0);
        let p = proj();
        assert!(z.contains(&p.from_xy(50.0, 50.0).unwrap()));
        assert!(!z.contains(&p.from_xy(250.0, 50.0).unwrap()));
        assert!((z.area_m2(&p) - 20_000.0).abs() < 1e-3);
        let (cx, cy) = p.to_xy(&z.centroid());
        assert!((cx - 100.0).abs() < 1e-3 && (cy - 50.0).abs() < 1e-3);
    }

    #[test]
    fn ward_inside_one_sector() {
        let ward = rect("w", 10.0, 10.0, 90.0, 90.0).with_population(1000.0);
        let sectors = [rect("s1", 0.0, 0.0, 100.0, 100.0), rect("s2", 200.0, 0.0, 300.0, 100.0)];
        let a = allocate_population(&[ward], &sectors).unwrap();
        assert!((a.by_sector["s1"] - 1000.0).abs() < 1e-6);
        assert_eq!(a.by_sector["s2"], 0.0);
        assert!(a.dropped() < 1e-6);
    }

    #[test]
    fn ward_split_in_half() {
        // Planar oracle: overlap of axis-aligned rectangles.
        let ward = rect("w", 0.0, 0.0, 200.0, 100.0).with_population(1000.0);
        let sectors = [
            rect("west", -50.0, -50.0, 100.0, 150.0),
            rect("east", 100.0, -50.0, 250.0, 150.0),
        ];
        let a = allocate_population(&[ward], &sectors).unwrap();
        assert!((a.by_sector["west"] - 500.0).abs() < 1.0);
        assert!((a.by_sector["east"] - 500.0).abs() < 1.0);
    }

    #[test]
    fn disjoint_ward_is_dropped() {
        let ward = rect("far", 1000.0, 1000.0, 1100.0, 1100.0).with_population(400.0);
        let sectors = [rect("s1", 0.0, 0.0, 100.0, 100.0)];
        let a = allocate_population(&[ward], &sectors).unwrap();
        assert_eq!(a.by_sector["s1"], 0.0);
        assert!((a.dropped() - 400.0).abs() < 1e-9);
        assert_eq!(a.total_population, 400.0);
    }

    #[test]
    fn missing_population_names_ward() {
        let err = allocate_population(&[rect("w7", 0.0, 0.0, 10.0, 10.0)], &[]).unwrap_err();
        assert!(err.to_string().contains("w7"));
    }

    #[test]
    fn loads_geojson_zones() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"name":"Ward 3","population":1200},
           "geometry":{"type":"Polygon","coordinates":[[[76.0,30.0],[76.01,30.0],[76.01,30.01],[76.0,30.01],[76.0,30.0]]]}}]}"#;
        let zones = load_zones(text).unwrap();
        assert_eq!(zones[0].id, "Ward 3");
        assert_eq!(zones[0].population, Some(1200.0));

        let bad = text
            .replace("\"Polygon\"", "\"LineString\"")
            .replace("[[[", "[[")
            .replace("]]]", "]]");
        assert!(matches!(load_zones(&bad), Err(Error::Schema { .. })));
    }

    proptest::proptest! {
        #[test]
        fn allocation_never_exceeds_population(
            wards in proptest::collection::vec((0.0f64..500.0, 0.0f64..500.0, 10.0f64..300.0, 10.0f64..300.0, 0.0f64..5000.0), 1..5),
            sectors in proptest::collection::vec((0.0f64..500.0, 0.0f64..500.0, 10.0f64..300.0, 10.0f64..300.0), 1..5),
        ) {
            let wards: Vec<_> = wards.iter().enumerate()
                .map(|(i, (x, y, w, h, pop))| rect(&format!("w{i}"), *x, *y, x + w, y + h).with_population(*pop))
                .collect();
            let sectors: Vec<_> = sectors.iter().enumerate()
                .map(|(i, (x, y, w, h))| rect(&format!("s{i}"), *x, *y, x + w, y + h))
                .collect();
            let a = allocate_population(&wards, &sectors).unwrap();
            proptest::prop_assert!(a.by_sector.values().all(|v| *v >= 0.0));
            proptest::prop_assert!(a.allocated() <= a.total_population * (1.0 + 1e-9) + 1e-9);
            proptest::prop_assert!((a.allocated() + a.dropped() - a.total_population).abs() <= 1e-6 * a.total_population.max(1.0));
        }
    }
}
