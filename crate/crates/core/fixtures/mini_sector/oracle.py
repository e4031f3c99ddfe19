"""Reference computation of the expected score set for this fixture.

Reads the fixture inputs and recomputes every stage from scratch with plain
Python: graph building, bounded Dijkstra, coverage grids, segment filtering
and scoring. Writes expected_scores.json next to this file.

    python3 oracle.py
"""

import csv
import heapq
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
R = 6_371_000.0
M_PER_DEG_LAT = R * math.pi / 180.0

WEIGHT = {1: 0.2, 2: 0.6, 3: 1.0}
POSITIVE = {"CurbStyle", "Crosswalk", "PedestrianSignal"}
CATEGORIES = [
    "Financial services", "Education", "Healthcare", "Public service", "Transport",
    "Food", "Religious", "Utilities", "Commercial", "Social",
]


def load(name):
    with open(os.path.join(HERE, name)) as f:
        return f.read()


def haversine(a, b):
    (lat1, lon1), (lat2, lon2) = a, b
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = math.radians(lat2 - lat1), math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * R * math.asin(min(1.0, math.sqrt(h)))


def m_per_deg_lon(lat):
    return M_PER_DEG_LAT * math.cos(math.radians(lat))


# ---- network -------------------------------------------------------------

def build_network(doc):
    """Two-position LineStrings only; endpoints merge when within 0.5 m."""
    nodes, edges = [], []

    def node_for(p):
        for i, q in enumerate(nodes):
            if haversine(p, q) <= 0.5:
                return i
        nodes.append(p)
        return len(nodes) - 1

    for f in doc["features"]:
        coords = f["geometry"]["coordinates"]
        assert len(coords) == 2, "oracle handles straight segments only"
        a = (coords[0][1], coords[0][0])
        b = (coords[1][1], coords[1][0])
        u, v = node_for(a), node_for(b)
        edges.append({"id": len(edges), "u": u, "v": v, "a": a, "b": b, "length": haversine(a, b)})
    return nodes, edges


def reachable_edges(nodes, edges, origin, budget):
    adj = {i: [] for i in range(len(nodes))}
    for e in edges:
        adj[e["u"]].append(e)
        adj[e["v"]].append(e)
    dist = {origin: 0.0}
    heap = [(0.0, origin)]
    done = set()
    while heap:
        d, n = heapq.heappop(heap)
        if n in done:
            continue
        done.add(n)
        for e in adj[n]:
            m = e["v"] if e["u"] == n else e["u"]
            nd = d + e["length"]
            if nd <= budget and nd < dist.get(m, math.inf):
                dist[m] = nd
                heapq.heappush(heap, (nd, m))
    return sorted({e["id"] for n in done for e in adj[n]})


def nearest_node(nodes, p):
    best = min(range(len(nodes)), key=lambda i: (haversine(p, nodes[i]), i))
    return best


# ---- zones ---------------------------------------------------------------

def load_sectors(doc):
    out = []
    for f in doc["features"]:
        ring = [(c[1], c[0]) for c in f["geometry"]["coordinates"][0]]
        out.append((f["properties"]["name"], ring))
    return out


def inside(p, ring):
    lat, lon = p
    hit = False
    j = len(ring) - 1
    for i in range(len(ring)):
        yi, xi = ring[i]
        yj, xj = ring[j]
        if (yi > lat) != (yj > lat):
            x = xi + (lat - yi) * (xj - xi) / (yj - yi)
            if lon < x:
                hit = not hit
        j = i
    return hit


# ---- POIs ----------------------------------------------------------------

def centered_cells(center, width_m, height_m, cell):
    """Centroids and bounds of a centred grid over a width x height box."""
    half_lat = height_m / 2 / M_PER_DEG_LAT
    half_lon = width_m / 2 / m_per_deg_lon(center[0])
    s, n = center[0] - half_lat, center[0] + half_lat
    w, e = center[1] - half_lon, center[1] + half_lon
    return grid_over(s, w, n, e, cell)


def grid_over(s, w, n, e, cell):
    ref = (s + n) / 2
    rows = max(1, math.ceil((n - s) * M_PER_DEG_LAT / cell - 1e-6))
    cols = max(1, math.ceil((e - w) * m_per_deg_lon(ref) / cell - 1e-6))
    dlat = cell / M_PER_DEG_LAT
    dlon = cell / m_per_deg_lon(ref)
    clat, clon = (s + n) / 2, (w + e) / 2
    south = clat - dlat * rows / 2
    west = clon - dlon * cols / 2
    cells = []
    for r in range(rows):
        for c in range(cols):
            cs, cw = south + dlat * r, west + dlon * c
            cells.append(((cs, cw, cs + dlat, cw + dlon), ((cs + cs + dlat) / 2, (cw + cw + dlon) / 2)))
    return cells


def sample_points(ring, spacing):
    lats = [p[0] for p in ring]
    lons = [p[1] for p in ring]
    cells = grid_over(min(lats), min(lons), max(lats), max(lons), spacing)
    return [c for _, c in cells if inside(c, ring)]


def fetch_pois(config, sectors, places, taxonomy):
    by_type = {t: cat for cat, ts in taxonomy.items() for t in ts}
    fetched = []
    for _, ring in sectors:
        for q in sample_points(ring, config["sample_spacing_m"]):
            rec = next(
                r for r in places["recordings"]
                if abs(r["radius_m"] - config["query_radius_m"]) < 1e-9
                and haversine((r["center"]["lat"], r["center"]["lon"]), q) <= places.get("match_tolerance_m", 1.0)
            )
            fetched.extend(rec["response"]["results"])
    seen, pois = set(), []
    for r in fetched:
        loc = r["geometry"]["location"]
        key = (round(loc["lat"] * 1e6), round(loc["lng"] * 1e6))
        if key in seen:
            continue
        seen.add(key)
        # Stage files keep seven decimals.
        lat, lon = float(f"{loc['lat']:.7f}"), float(f"{loc['lng']:.7f}")
        category = next((by_type[t] for t in r["types"] if t in by_type), "Uncategorized")
        sector = next((sid for sid, ring in sectors if inside((lat, lon), ring)), None)
        pois.append({"id": r["place_id"], "loc": (lat, lon), "category": category, "sector": sector})
    return pois


# ---- coverage ------------------------------------------------------------

def covered_cells(poi, radius, cell, panos, search_radius):
    reach = cell / math.sqrt(2)
    out = []
    for bounds, centroid in centered_cells(poi, 2 * radius, 2 * radius, cell):
        best = None
        for p in panos:
            d = haversine(centroid, p)
            if d <= search_radius and (best is None or d < best[0]):
                best = (d, p)
        if best is not None and haversine(best[1], centroid) <= reach:
            out.append(bounds)
    return out


def covered_fraction(edge, cells):
    length = edge["length"]
    n = max(1, math.ceil(length / 1.0 - 1e-6))
    hits = 0
    for k in range(n):
        t = (k + 0.5) / n
        lat = edge["a"][0] + (edge["b"][0] - edge["a"][0]) * t
        lon = edge["a"][1] + (edge["b"][1] - edge["a"][1]) * t
        if any(s <= lat < nn and w <= lon < e for s, w, nn, e in cells):
            hits += 1
    return hits / n


# ---- scoring -------------------------------------------------------------

def contribution(kind, sev):
    return 1.2 - WEIGHT[sev] if kind in POSITIVE else -WEIGHT[sev]


def percentile_linear(values, q):
    v = sorted(values)
    h = q * (len(v) - 1)
    lo = math.floor(h)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (h - lo) * (v[hi] - v[lo])


def normalize(raw):
    neg = [-r for r in raw if r < 0]
    x = list(raw)
    if neg:
        t = percentile_linear(neg, 0.95)
        x = [max(r, -t) for r in x]
    if min(x) == max(x):
        return [0.5] * len(x)
    mean = sum(x) / len(x)
    sd = math.sqrt(sum((v - mean) ** 2 for v in x) / len(x))
    return [1 / (1 + math.exp(-(v - mean) / sd)) for v in x]


def run(verbose=False):
    config = {}
    for line in load("config.toml").splitlines():
        if "=" in line and not line.strip().startswith("#"):
            k, v = (s.strip() for s in line.split("=", 1))
            config[k] = json.loads(v)
    nodes, edges = build_network(json.loads(load("network.geojson")))
    sectors = load_sectors(json.loads(load("sectors.geojson")))
    places = json.loads(load("places.json"))
    streetview = json.loads(load("streetview.json"))
    taxonomy = json.loads(load(os.path.join("..", "..", "data", "poi_taxonomy.json")))
    panos = [(p["location"]["lat"], p["location"]["lon"]) for p in streetview["panoramas"]]
    budget = config["trace_budget_m"]
    radius = config.get("coverage_radius_m", budget)
    cell = config["cell_size_m"]
    threshold = config["coverage_threshold"]

    pois = fetch_pois(config, sectors, places, taxonomy)
    rings = dict(sectors)
    fractions = {}
    for p in pois:
        origin = nearest_node(nodes, p["loc"])
        traced = reachable_edges(nodes, edges, origin, budget)
        cells = covered_cells(p["loc"], radius, cell, panos, streetview.get("search_radius_m", 50.0))
        kept = []
        for eid in traced:
            f = covered_fraction(edges[eid], cells)
            fractions[(p["id"], eid)] = f
            if f >= threshold:
                e = edges[eid]
                mid = ((e["a"][0] + e["b"][0]) / 2, (e["a"][1] + e["b"][1]) / 2)
                if p["sector"] is None or inside(mid, rings[p["sector"]]):
                    kept.append(eid)
        p["segments"] = kept

    labels = list(csv.DictReader(load("labels.csv").splitlines()))
    corpus = sorted({e for p in pois for e in p["segments"]})
    sector_of = {}
    for p in pois:
        for e in p["segments"]:
            sector_of.setdefault(e, p["sector"])
    raw = {e: 0.0 for e in corpus}
    for l in labels:
        seg = int(l["segment_id"])
        if seg in raw:
            raw[seg] += contribution(l["label_type"], int(l["severity"]))
    seg = dict(zip(corpus, normalize([raw[e] for e in corpus])))

    poi_scores, unscored = {}, []
    for p in pois:
        if not p["segments"]:
            unscored.append(p["id"])
            continue
        lengths = [edges[e]["length"] for e in p["segments"]]
        score = sum(seg[e] * l for e, l in zip(p["segments"], lengths)) / sum(lengths)
        poi_scores[p["id"]] = {
            "score": score,
            "category": p["category"],
            "sector_id": p["sector"],
            "total_length_m": sum(lengths),
            "segment_count": len(lengths),
        }

    cells = {}
    for pid in sorted(poi_scores):
        s = poi_scores[pid]
        if s["category"] != "Uncategorized":
            cells.setdefault((CATEGORIES.index(s["category"]), s["sector_id"] or ""), []).append(s["score"])
    sector_categories = [
        {"sector_id": sid or None, "category": CATEGORIES[ci], "score": sum(v) / len(v), "poi_count": len(v)}
        for (ci, sid), v in sorted(cells.items())
    ]
    across = {}
    for ci, cat in enumerate(CATEGORIES):
        groups = [c for c in sector_categories if c["category"] == cat]
        n = sum(c["poi_count"] for c in groups)
        across[cat] = {
            "score": sum(c["score"] * c["poi_count"] for c in groups) / n if n else None,
            "poi_count": n,
        }

    expected = {
        "scores": {
            "segments": {
                str(e): {"raw": raw[e], "seg": seg[e], "length_m": edges[e]["length"], "sector_id": sector_of[e]}
                for e in corpus
            },
            "pois": poi_scores,
            "unscored_pois": sorted(unscored),
            "sector_categories": sector_categories,
            "across_sector": across,
        },
        "findings": sum(1 for l in labels if int(l["severity"]) >= config.get("findings_min_severity", 2)),
    }
    if verbose:
        for (pid, eid), f in sorted(fractions.items()):
            print(f"{pid} edge {eid}: covered {f:.3f}")
    return expected, fractions, pois, edges


if __name__ == "__main__":
    expected, _, _, _ = run()
    with open(os.path.join(HERE, "expected_scores.json"), "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"{len(expected['scores']['segments'])} segments, {len(expected['scores']['pois'])} POIs, "
          f"findings {expected['findings']}")
