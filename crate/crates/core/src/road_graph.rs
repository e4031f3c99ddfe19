//! Pedestrian road network loading and budgeted path tracing.
//!
//! A network is an undirected multigraph whose edges carry their own polyline
//! geometry. [`trace_paths`] collects every edge with at least one endpoint
//! whose shortest walking distance from the origin is within budget; whole
//! edges are kept, never split.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_distance, GeoPoint, LocalProjection, Polyline};
use crate::{Error, Result};

/// Endpoints closer than this are merged into one node.
pub const NODE_MERGE_TOLERANCE_M: f64 = 0.5;

pub const DEFAULT_TRACE_BUDGET_M: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for EdgeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(EdgeId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadType {
    Residential,
    Tertiary,
    Secondary,
    Primary,
    Other,
}

impl RoadType {
    /// Maps an OSM `highway` value; link roads follow their parent class.
    pub fn from_highway(value: &str) -> RoadType {
        match value.trim().to_ascii_lowercase().as_str() {
            "residential" | "living_street" => RoadType::Residential,
            "tertiary" | "tertiary_link" => RoadType::Tertiary,
            "secondary" | "secondary_link" => RoadType::Secondary,
            "primary" | "primary_link" => RoadType::Primary,
            _ => RoadType::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RoadType::Residential => "residential",
            RoadType::Tertiary => "tertiary",
            RoadType::Secondary => "secondary",
            RoadType::Primary => "primary",
            RoadType::Other => "other",
        }
    }
}

impl fmt::Display for RoadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RoadType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residential" => Ok(RoadType::Residential),
            "tertiary" => Ok(RoadType::Tertiary),
            "secondary" => Ok(RoadType::Secondary),
            "primary" => Ok(RoadType::Primary),
            "other" => Ok(RoadType::Other),
            _ => Err(Error::invalid(format!("unknown road type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub endpoints: (NodeId, NodeId),
    pub geometry: Polyline,
    pub road_type: RoadType,
    pub length_m: f64,
}

impl Edge {
    pub fn other_end(&self, n: NodeId) -> NodeId {
        if self.endpoints.0 == n {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

/// Immutable pedestrian graph. Node and edge ids are dense indices.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<GeoPoint>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
}

/// Edge specification used by [`RoadNetwork::from_parts`].
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub from: NodeId,
    pub to: NodeId,
    /// Straight segment between the endpoints when `None`.
    pub geometry: Option<Polyline>,
    pub road_type: RoadType,
}

impl RoadNetwork {
    pub fn from_parts(nodes: Vec<GeoPoint>, specs: Vec<EdgeSpec>) -> Result<Self> {
        let mut edges = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            for n in [spec.from, spec.to] {
                if n.0 as usize >= nodes.len() {
                    return Err(Error::invalid(format!("edge {i} references missing node {n}")));
                }
            }
            let geometry = match spec.geometry {
                Some(g) => g,
                None => Polyline::new(vec![nodes[spec.from.0 as usize], nodes[spec.to.0 as usize]])?,
            };
            let length_m = geometry.length();
            edges.push(Edge {
                id: EdgeId(i as u32),
                endpoints: (spec.from, spec.to),
                geometry,
                road_type: spec.road_type,
                length_m,
            });
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.endpoints.0 .0 as usize].push(e.id);
            if e.endpoints.1 != e.endpoints.0 {
                adjacency[e.endpoints.1 .0 as usize].push(e.id);
            }
        }
        Ok(RoadNetwork {
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&GeoPoint> {
        self.nodes.get(id.0 as usize)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.0 as usize)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &GeoPoint)> {
        self.nodes.iter().enumerate().map(|(i, p)| (NodeId(i as u32), p))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incident(&self, n: NodeId) -> &[EdgeId] {
        &self.adjacency[n.0 as usize]
    }

    pub fn edge_ids(&self) -> BTreeSet<EdgeId> {
        self.edges.iter().map(|e| e.id).collect()
    }

    pub fn to_geojson(&self) -> geojson::FeatureCollection {
        let features = self
            .edges
            .iter()
            .map(|e| {
                let mut props = serde_json::Map::new();
                props.insert("edge_id".into(), e.id.0.into());
                props.insert("highway".into(), e.road_type.as_str().into());
                props.insert("length_m".into(), e.length_m.into());
                feature(e.geometry.to_geojson_geometry(), props)
            })
            .collect();
        collection(features)
    }
}

pub(crate) fn feature(
    geometry: geojson::Geometry,
    properties: serde_json::Map<String, serde_json::Value>,
) -> geojson::Feature {
    geojson::Feature {
        bbox: None,
        geometry: Some(geometry),
        id: None,
        properties: Some(properties),
        foreign_members: None,
    }
}

pub(crate) fn collection(features: Vec<geojson::Feature>) -> geojson::FeatureCollection {
    geojson::FeatureCollection {
        bbox: None,
        features,
        foreign_members: None,
    }
}

/// Greedy spatial clustering of vertices on a hash grid of tolerance-sized
/// buckets; a vertex joins the first cluster whose representative lies
/// within tolerance.
struct VertexClusters {
    proj: LocalProjection,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    reps: Vec<GeoPoint>,
}

impl VertexClusters {
    fn new(proj: LocalProjection) -> Self {
        VertexClusters {
            proj,
            buckets: HashMap::new(),
            reps: Vec::new(),
        }
    }

    fn key(&self, p: &GeoPoint) -> (i64, i64) {
        let (x, y) = self.proj.to_xy(p);
        (
            (x / NODE_MERGE_TOLERANCE_M).floor() as i64,
            (y / NODE_MERGE_TOLERANCE_M).floor() as i64,
        )
    }

    fn assign(&mut self, p: &GeoPoint) -> usize {
        let (kx, ky) = self.key(p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &c in ids {
                        if haversine_distance(&self.reps[c], p) <= NODE_MERGE_TOLERANCE_M && best.is_none_or(|b| c < b)
                        {
                            best = Some(c);
                        }
                    }
                }
            }
        }
        if let Some(c) = best {
            return c;
        }
        let c = self.reps.len();
        self.reps.push(*p);
        self.buckets.entry((kx, ky)).or_default().push(c);
        c
    }
}

/// Builds a network from a GeoJSON FeatureCollection of LineStrings.
///
/// Nodes are placed at feature endpoints and at interior vertices shared with
/// another feature (or revisited by the same one); features are split at
/// those nodes. Coincident vertices within [`NODE_MERGE_TOLERANCE_M`] merge.
/// Features that are not LineStrings are skipped with a warning.
pub fn load_network(text: &str) -> Result<RoadNetwork> {
    let gj: geojson::GeoJson = text.parse()?;
    let fc = match gj {
        geojson::GeoJson::FeatureCollection(fc) => fc,
        _ => return Err(Error::GeoJson("expected a FeatureCollection".into())),
    };

    let mut lines: Vec<(Vec<GeoPoint>, RoadType)> = Vec::new();
    for (i, f) in fc.features.iter().enumerate() {
        let coords = match f.geometry.as_ref().map(|g| &g.value) {
            Some(geojson::Value::LineString(c)) => c,
            other => {
                log::warn!(
                    "feature {i}: skipping non-LineString geometry ({})",
                    other.map(|v| v.type_name()).unwrap_or("none")
                );
                continue;
            }
        };
        let points = coords
            .iter()
            .map(|pos| GeoPoint::from_lon_lat(pos))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::schema(format!("feature {i}"), e.to_string()))?;
        if points.len() < 2 {
            log::warn!("feature {i}: skipping LineString with fewer than two positions");
            continue;
        }
        let highway = f.property("highway").and_then(|v| v.as_str());
        if highway.is_none() {
            log::warn!("feature {i}: no highway tag, using road type other");
        }
        lines.push((points, highway.map(RoadType::from_highway).unwrap_or(RoadType::Other)));
    }
    if lines.is_empty() {
        return Err(Error::GeoJson(
            "network document contains no LineString features".into(),
        ));
    }

    let proj = LocalProjection::new(lines[0].0[0]);
    let mut clusters = VertexClusters::new(proj);
    let assigned: Vec<Vec<usize>> = lines
        .iter()
        .map(|(pts, _)| pts.iter().map(|p| clusters.assign(p)).collect())
        .collect();

    let mut occurrences = vec![0usize; clusters.reps.len()];
    let mut is_node = vec![false; clusters.reps.len()];
    for ids in &assigned {
        for &c in ids {
            occurrences[c] += 1;
        }
        is_node[ids[0]] = true;
        is_node[*ids.last().expect("at least two positions")] = true;
    }
    for (c, n) in occurrences.iter().enumerate() {
        if *n >= 2 {
            is_node[c] = true;
        }
    }

    let mut node_of_cluster: HashMap<usize, NodeId> = HashMap::new();
    let mut nodes = Vec::new();
    let mut specs = Vec::new();
    let mut node_for = |c: usize, nodes: &mut Vec<GeoPoint>| {
        *node_of_cluster.entry(c).or_insert_with(|| {
            nodes.push(clusters.reps[c]);
            NodeId(nodes.len() as u32 - 1)
        })
    };

    for ((pts, road_type), ids) in lines.iter().zip(&assigned) {
        let mut start = 0;
        for k in 1..pts.len() {
            if !is_node[ids[k]] {
                continue;
            }
            let piece = Polyline::new(pts[start..=k].to_vec())?;
            if piece.length() > 0.0 || ids[start] != ids[k] {
                let from = node_for(ids[start], &mut nodes);
                let to = node_for(ids[k], &mut nodes);
                if from != to || piece.length() > NODE_MERGE_TOLERANCE_M {
                    specs.push(EdgeSpec {
                        from,
                        to,
                        geometry: Some(piece),
                        road_type: *road_type,
                    });
                }
            }
            start = k;
        }
    }
    RoadNetwork::from_parts(nodes, specs)
}

/// Node closest to `p` by haversine distance; ties go to the smaller id.
pub fn nearest_node(net: &RoadNetwork, p: &GeoPoint) -> Result<NodeId> {
    let mut best: Option<(NodeId, f64)> = None;
    for (id, q) in net.nodes() {
        let d = haversine_distance(p, q);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
        .ok_or_else(|| Error::invalid("nearest node requested on an empty network"))
}

/// Edges reachable within a walking budget from one origin node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedPathSet {
    pub origin: NodeId,
    pub budget_m: f64,
    pub edges: BTreeSet<EdgeId>,
    /// Shortest network distance of every node within budget.
    pub node_distances: BTreeMap<NodeId, f64>,
}

impl TracedPathSet {
    /// Distance from the origin to the nearer endpoint of `edge`.
    pub fn near_distance(&self, net: &RoadNetwork, edge: EdgeId) -> Option<f64> {
        let e = net.edge(edge)?;
        let a = self.node_distances.get(&e.endpoints.0);
        let b = self.node_distances.get(&e.endpoints.1);
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(*y)),
            (Some(x), None) | (None, Some(x)) => Some(*x),
            (None, None) => None,
        }
    }

    /// Edge LineStrings annotated with their near-endpoint distance.
    pub fn to_geojson(&self, net: &RoadNetwork, poi_id: Option<&str>) -> Vec<geojson::Feature> {
        self.edges
            .iter()
            .filter_map(|id| net.edge(*id))
            .map(|e| {
                let mut props = serde_json::Map::new();
                if let Some(poi) = poi_id {
                    props.insert("poi_id".into(), poi.into());
                }
                props.insert("edge_id".into(), e.id.0.into());
                props.insert("road_type".into(), e.road_type.as_str().into());
                props.insert("length_m".into(), e.length_m.into());
                if let Some(d) = self.near_distance(net, e.id) {
                    props.insert("distance_m".into(), d.into());
                }
                feature(e.geometry.to_geojson_geometry(), props)
            })
            .collect()
    }
}

#[derive(PartialEq)]
struct QueueEntry(f64, NodeId);

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Collects every edge with at least one endpoint whose shortest network
/// distance from `origin` is at most `budget_m`.
pub fn trace_paths(net: &RoadNetwork, origin: NodeId, budget_m: f64) -> Result<TracedPathSet> {
    if net.node(origin).is_none() {
        return Err(Error::NotFound(format!("origin node {origin}")));
    }
    if !(budget_m.is_finite() && budget_m > 0.0) {
        return Err(Error::invalid(format!("trace budget must be positive, got {budget_m}")));
    }

    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut best = vec![f64::INFINITY; net.node_count()];
    let mut heap = BinaryHeap::new();
    best[origin.0 as usize] = 0.0;
    heap.push(QueueEntry(0.0, origin));
    while let Some(QueueEntry(d, n)) = heap.pop() {
        if dist.contains_key(&n) || d > best[n.0 as usize] {
            continue;
        }
        dist.insert(n, d);
        for eid in net.incident(n) {
            let e = &net.edges[eid.0 as usize];
            let m = e.other_end(n);
            let nd = d + e.length_m;
            if nd <= budget_m && nd < best[m.0 as usize] {
                best[m.0 as usize] = nd;
                heap.push(QueueEntry(nd, m));
            }
        }
    }

    let edges = dist.keys().flat_map(|n| net.incident(*n).iter().copied()).collect();
    Ok(TracedPathSet {
        origin,
        budget_m,
        edges,
        node_distances: dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proj() -> LocalProjection {
        LocalProjection::new(GeoPoint::new(30.7333, 76.7794).unwrap())
    }

    fn line_feature(coords: &[(f64, f64)], highway: &str) -> String {
        let p = proj();
        let pos: Vec<String> = coords
            .iter()
            .map(|(x, y)| {
                let g = p.from_xy(*x, *y).unwrap();
                format!("[{:.10},{:.10}]", g.lon(), g.lat())
            })
            .collect();
        format!(
            r#"{{"type":"Feature","properties":{{"highway":"{highway}"}},"geometry":{{"type":"LineString","coordinates":[{}]}}}}"#,
            pos.join(",")
        )
    }

    fn fc(features: &[String]) -> String {
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(","))
    }

    #[test]
    fn shared_endpoint_merges() {
        let doc = fc(&[
            line_feature(&[(0.0, 0.0), (100.0, 0.0)], "residential"),
            line_feature(&[(100.0, 0.0), (100.0, 100.0)], "tertiary"),
        ]);
        let net = load_network(&doc).unwrap();
        assert_eq!((net.node_count(), net.edge_count()), (3, 2));
        assert_eq!(net.edges()[0].road_type, RoadType::Residential);
        assert_eq!(net.edges()[1].road_type, RoadType::Tertiary);
    }

    #[test]
    fn near_coincident_endpoints_merge_within_tolerance() {
        let doc = fc(&[
            line_feature(&[(0.0, 0.0), (100.0, 0.0)], "residential"),
            line_feature(&[(100.3, 0.0), (200.0, 0.0)], "residential"),
            line_feature(&[(200.9, 0.0), (300.0, 0.0)], "residential"),
        ]);
        let net = load_network(&doc).unwrap();
        // 0.3 m gap merges; 0.9 m gap does not.
        assert_eq!(net.node_count(), 5);
    }

    #[test]
    fn unknown_highway_and_skipped_geometry() {
        let point = r#"{"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[76.78,30.73]}}"#;
        let doc = fc(&[line_feature(&[(0.0, 0.0), (50.0, 0.0)], "busway"), point.to_string()]);
        let net = load_network(&doc).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edges()[0].road_type, RoadType::Other);
        assert!(load_network(&fc(&[point.to_string()])).is_err());
        assert!(load_network(&fc(&[])).is_err());
    }

    #[test]
    fn interior_shared_vertex_splits_features() {
        // A long east-west street crossed by a north-south street at x = 100.
        let doc = fc(&[
            line_feature(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)], "secondary"),
            line_feature(&[(100.0, -100.0), (100.0, 0.0), (100.0, 100.0)], "residential"),
        ]);
        let net = load_network(&doc).unwrap();
        assert_eq!((net.node_count(), net.edge_count()), (5, 4));
        for e in net.edges() {
            assert!((e.length_m - e.geometry.length()).abs() < 0.5);
            assert!((e.length_m - 100.0).abs() < 0.01);
        }
    }

    #[test]
    fn ten_feature_grid_matches_hand_adjacency() {
        // 3 x 3 lattice of nodes at 100 m spacing, drawn as 6 full-length
        // streets split into 12 edges, plus 4 spurs = 10 features.
        let mut features = Vec::new();
        for k in 0..3 {
            let y = k as f64 * 100.0;
            features.push(line_feature(&[(0.0, y), (100.0, y), (200.0, y)], "residential"));
            features.push(line_feature(&[(y, 0.0), (y, 100.0), (y, 200.0)], "tertiary"));
        }
        features.push(line_feature(&[(0.0, 0.0), (-80.0, 0.0)], "other"));
        features.push(line_feature(&[(200.0, 200.0), (280.0, 200.0)], "other"));
        features.push(line_feature(&[(0.0, 200.0), (0.0, 280.0)], "other"));
        features.push(line_feature(&[(200.0, 0.0), (200.0, -80.0)], "other"));
        assert_eq!(features.len(), 10);
        let net = load_network(&fc(&features)).unwrap();
        // Hand count: 9 lattice nodes + 4 spur tips; 12 lattice edges + 4 spurs.
        assert_eq!(net.node_count(), 13);
        assert_eq!(net.edge_count(), 16);
        let degree3 = net.nodes().filter(|(n, _)| net.incident(*n).len() == 3).count();
        let degree4 = net.nodes().filter(|(n, _)| net.incident(*n).len() == 4).count();
        // Edge midpoints have degree 3, the centre degree 4, spur corners 3.
        assert_eq!(degree4, 1);
        assert_eq!(degree3, 8);
    }

    fn path_network() -> RoadNetwork {
        let p = proj();
        let nodes = (0..4).map(|i| p.from_xy(i as f64 * 400.0, 0.0).unwrap()).collect();
        let specs = (0..3)
            .map(|i| EdgeSpec {
                from: NodeId(i),
                to: NodeId(i + 1),
                geometry: None,
                road_type: RoadType::Residential,
            })
            .collect();
        RoadNetwork::from_parts(nodes, specs).unwrap()
    }

    #[test]
    fn path_graph_budget_1000() {
        let net = path_network();
        let t = trace_paths(&net, NodeId(0), 1000.0).unwrap();
        assert_eq!(t.edges, [EdgeId(0), EdgeId(1), EdgeId(2)].into());
        assert!(t.node_distances[&NodeId(2)] < 1000.0);
        assert!(!t.node_distances.contains_key(&NodeId(3)));
    }

    #[test]
    fn tiny_budget_keeps_incident_edges_only() {
        let net = path_network();
        let t = trace_paths(&net, NodeId(1), 10.0).unwrap();
        assert_eq!(t.edges, [EdgeId(0), EdgeId(1)].into());
    }

    #[test]
    fn cycle_edges_listed_once() {
        let p = proj();
        let nodes = vec![
            p.from_xy(0.0, 0.0).unwrap(),
            p.from_xy(100.0, 0.0).unwrap(),
            p.from_xy(50.0, 80.0).unwrap(),
        ];
        let specs = [(0, 1), (1, 2), (2, 0)]
            .iter()
            .map(|(a, b)| EdgeSpec {
                from: NodeId(*a),
                to: NodeId(*b),
                geometry: None,
                road_type: RoadType::Other,
            })
            .collect();
        let net = RoadNetwork::from_parts(nodes, specs).unwrap();
        // Small budgets admit only the two edges at the origin.
        for (budget, expected) in [(1.0, 2), (50.0, 2), (150.0, 3), (1e6, 3)] {
            let t = trace_paths(&net, NodeId(0), budget).unwrap();
            assert_eq!(t.edges.len(), expected, "budget {budget}");
        }
    }

    #[test]
    fn trace_errors() {
        let net = path_network();
        assert!(matches!(trace_paths(&net, NodeId(9), 100.0), Err(Error::NotFound(_))));
        assert!(trace_paths(&net, NodeId(0), 0.0).is_err());
        assert!(trace_paths(&net, NodeId(0), f64::NAN).is_err());
    }

    #[test]
    fn nearest_node_rules() {
        let p = proj();
        let nodes: Vec<GeoPoint> = (0..8).map(|i| p.from_xy(i as f64 * 10.0, 0.0).unwrap()).collect();
        let net = RoadNetwork::from_parts(nodes.clone(), vec![]).unwrap();
        assert_eq!(nearest_node(&net, &nodes[5]).unwrap(), NodeId(5));
        let probe = p.from_xy(31.0, 0.0).unwrap();
        assert_eq!(nearest_node(&net, &probe).unwrap(), NodeId(3));
        let empty = RoadNetwork::from_parts(vec![], vec![]).unwrap();
        assert!(nearest_node(&empty, &probe).is_err());
    }

    #[test]
    fn nearest_node_ties_go_to_smaller_id() {
        let a = GeoPoint::new(0.0, 0.001).unwrap();
        let b = GeoPoint::new(0.0, -0.001).unwrap();
        let mut nodes = vec![GeoPoint::new(1.0, 1.0).unwrap(); 8];
        nodes[3] = a;
        nodes[7] = b;
        let net = RoadNetwork::from_parts(nodes, vec![]).unwrap();
        let probe = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(nearest_node(&net, &probe).unwrap(), NodeId(3));
    }
}
