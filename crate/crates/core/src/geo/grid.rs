use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GeoPoint, Polyline, METERS_PER_DEG_LAT};
use crate::{Error, Result};

/// Arc-length step used when sampling a polyline for coverage.
pub const SAMPLE_STEP_M: f64 = 1.0;

// Absorbs round-off when a region is an exact multiple of the cell size.
const CEIL_SLACK: f64 = 1e-6;

/// Axis-aligned latitude/longitude rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl Region {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self> {
        for v in [south, west, north, east] {
            if !v.is_finite() {
                return Err(Error::invalid("region bounds must be finite"));
            }
        }
        if south >= north || west >= east {
            return Err(Error::invalid(format!(
                "degenerate region [{south}, {west}] .. [{north}, {east}]"
            )));
        }
        Ok(Region {
            south,
            west,
            north,
            east,
        })
    }

    /// Rectangle of `width_m` × `height_m` centred on `center`.
    pub fn from_center_extent(center: &GeoPoint, width_m: f64, height_m: f64) -> Result<Self> {
        let half_lat = height_m / 2.0 / METERS_PER_DEG_LAT;
        let half_lon = width_m / 2.0 / meters_per_deg_lon(center.lat());
        Region::new(
            center.lat() - half_lat,
            center.lon() - half_lon,
            center.lat() + half_lat,
            center.lon() + half_lon,
        )
    }

    /// Square of side `2 * half_side_m` centred on `center`.
    pub fn around(center: &GeoPoint, half_side_m: f64) -> Result<Self> {
        Region::from_center_extent(center, 2.0 * half_side_m, 2.0 * half_side_m)
    }

    /// Bounding box of a set of points.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Result<Self> {
        let mut it = points.into_iter();
        let first = it.next().ok_or_else(|| Error::invalid("bounding box of no points"))?;
        let (mut s, mut w, mut n, mut e) = (first.lat(), first.lon(), first.lat(), first.lon());
        for p in it {
            s = s.min(p.lat());
            n = n.max(p.lat());
            w = w.min(p.lon());
            e = e.max(p.lon());
        }
        Region::new(s, w, n, e)
    }

    pub fn reference_lat(&self) -> f64 {
        (self.south + self.north) / 2.0
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: self.reference_lat(),
            lon: (self.west + self.east) / 2.0,
        }
    }

    pub fn width_m(&self) -> f64 {
        (self.east - self.west) * meters_per_deg_lon(self.reference_lat())
    }

    pub fn height_m(&self) -> f64 {
        (self.north - self.south) * METERS_PER_DEG_LAT
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.south..=self.north).contains(&p.lat()) && (self.west..=self.east).contains(&p.lon())
    }

    pub fn ring(&self) -> Vec<Vec<f64>> {
        vec![
            vec![self.west, self.south],
            vec![self.east, self.south],
            vec![self.east, self.north],
            vec![self.west, self.north],
            vec![self.west, self.south],
        ]
    }
}

fn meters_per_deg_lon(lat: f64) -> f64 {
    METERS_PER_DEG_LAT * lat.to_radians().cos()
}

/// Allowed cell side lengths for coverage grids, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSizeBand {
    pub min_m: f64,
    pub max_m: f64,
}

impl Default for CellSizeBand {
    fn default() -> Self {
        CellSizeBand {
            min_m: 60.0,
            max_m: 80.0,
        }
    }
}

impl CellSizeBand {
    pub fn check(&self, cell_size_m: f64) -> Result<()> {
        if !(self.min_m..=self.max_m).contains(&cell_size_m) {
            return Err(Error::Config(format!(
                "cell size {cell_size_m} m outside [{}, {}] m",
                self.min_m, self.max_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub row: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub id: CellId,
    pub bounds: Region,
    pub covered: bool,
}

impl GridCell {
    pub fn centroid(&self) -> GeoPoint {
        self.bounds.center()
    }
}

/// Regular lattice of square cells. Side lengths are exact in meters at the
/// reference latitude of the region the grid was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    south: f64,
    west: f64,
    dlat: f64,
    dlon: f64,
    rows: u32,
    cols: u32,
    cell_size_m: f64,
}

impl Grid {
    /// Tiles `region` starting at its south-west corner; the last row and
    /// column may overhang the north and east edges.
    pub fn tiling(region: &Region, cell_size_m: f64) -> Result<Self> {
        let (rows, cols, dlat, dlon) = Self::dimensions(region, cell_size_m)?;
        Ok(Grid {
            south: region.south,
            west: region.west,
            dlat,
            dlon,
            rows,
            cols,
            cell_size_m,
        })
    }

    /// Same cell counts as [`Grid::tiling`] but with the overhang split evenly
    /// so the lattice is centred on the region.
    pub fn centered(region: &Region, cell_size_m: f64) -> Result<Self> {
        let (rows, cols, dlat, dlon) = Self::dimensions(region, cell_size_m)?;
        let c = region.center();
        Ok(Grid {
            south: c.lat() - dlat * rows as f64 / 2.0,
            west: c.lon() - dlon * cols as f64 / 2.0,
            dlat,
            dlon,
            rows,
            cols,
            cell_size_m,
        })
    }

    fn dimensions(region: &Region, cell_size_m: f64) -> Result<(u32, u32, f64, f64)> {
        if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
            return Err(Error::Config(format!("cell size must be positive, got {cell_size_m}")));
        }
        let count = |extent: f64| ((extent / cell_size_m) - CEIL_SLACK).ceil().max(1.0);
        let rows = count(region.height_m());
        let cols = count(region.width_m());
        if rows * cols > 4.0e6 {
            return Err(Error::Config(format!("grid of {rows}x{cols} cells is too large")));
        }
        Ok((
            rows as u32,
            cols as u32,
            cell_size_m / METERS_PER_DEG_LAT,
            cell_size_m / meters_per_deg_lon(region.reference_lat()),
        ))
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn extent(&self) -> Region {
        Region {
            south: self.south,
            west: self.west,
            north: self.south + self.dlat * self.rows as f64,
            east: self.west + self.dlon * self.cols as f64,
        }
    }

    pub fn cell(&self, id: CellId) -> GridCell {
        let south = self.south + self.dlat * id.row as f64;
        let west = self.west + self.dlon * id.col as f64;
        GridCell {
            id,
            bounds: Region {
                south,
                west,
                north: south + self.dlat,
                east: west + self.dlon,
            },
            covered: false,
        }
    }

    /// Row-major list of every cell.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::with_capacity(self.cell_count());
        for row in 0..self.rows {
            for col in 0..self.cols {
                out.push(self.cell(CellId { row, col }));
            }
        }
        out
    }

    /// Cell containing `p`; cells are half-open on their north and east edges.
    pub fn locate(&self, p: &GeoPoint) -> Option<CellId> {
        let r = ((p.lat() - self.south) / self.dlat).floor();
        let c = ((p.lon() - self.west) / self.dlon).floor();
        if r < 0.0 || c < 0.0 || r >= self.rows as f64 || c >= self.cols as f64 {
            return None;
        }
        Some(CellId {
            row: r as u32,
            col: c as u32,
        })
    }
}

/// Tiles `region` with square cells whose side must lie inside `band`.
pub fn make_grid(region: &Region, cell_size_m: f64, band: &CellSizeBand) -> Result<Grid> {
    band.check(cell_size_m)?;
    Grid::tiling(region, cell_size_m)
}

/// A grid together with the set of cells flagged as covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMask {
    pub grid: Grid,
    pub covered: BTreeSet<CellId>,
}

impl CoverageMask {
    pub fn new(grid: Grid) -> Self {
        CoverageMask {
            grid,
            covered: BTreeSet::new(),
        }
    }

    pub fn is_covered(&self, p: &GeoPoint) -> bool {
        self.grid.locate(p).is_some_and(|id| self.covered.contains(&id))
    }
}

/// Fraction of `line` (by length) lying in covered cells.
///
/// The line is cut into `ceil(length / 1 m)` equal pieces and the midpoint of
/// each piece is tested; samples outside the grid count as uncovered. A
/// zero-length line is judged by its single point.
pub fn covered_fraction(line: &Polyline, mask: &CoverageMask) -> f64 {
    if mask.covered.is_empty() {
        return 0.0;
    }
    let length = line.length();
    if length <= 0.0 {
        return if mask.is_covered(line.first()) { 1.0 } else { 0.0 };
    }
    let n = ((length / SAMPLE_STEP_M) - CEIL_SLACK).ceil().max(1.0) as usize;
    let step = length / n as f64;

    // Walk spans once instead of calling point_at per sample.
    let pts = line.points();
    let mut span_idx = 0;
    let mut span_start = 0.0;
    let mut span_len = super::haversine_distance(&pts[0], &pts[1.min(pts.len() - 1)]);
    let mut hits = 0usize;
    for k in 0..n {
        let s = (k as f64 + 0.5) * step;
        while s > span_start + span_len && span_idx + 2 < pts.len() {
            span_start += span_len;
            span_idx += 1;
            span_len = super::haversine_distance(&pts[span_idx], &pts[span_idx + 1]);
        }
        let t = if span_len > 0.0 {
            ((s - span_start) / span_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let p = pts[span_idx].lerp(&pts[(span_idx + 1).min(pts.len() - 1)], t);
        if mask.is_covered(&p) {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}
