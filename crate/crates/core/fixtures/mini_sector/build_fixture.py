"""Writes the mini-sector fixture inputs.

Layout in local meters around the origin: a 6 x 3 street grid with 100 m
blocks (x = 0..500, y = 0..200) plus three spurs, two rectangular sectors
split at x = 260, and a panorama lattice that only reaches x = 300, so the
eastern streets fall outside street-view coverage.

    python3 build_fixture.py && python3 oracle.py
"""

import json
import math
import os

import oracle

HERE = os.path.dirname(os.path.abspath(__file__))
ORIGIN = (30.7333, 76.7794)


def to_ll(x, y):
    lat = ORIGIN[0] + y / oracle.M_PER_DEG_LAT
    lon = ORIGIN[1] + x / oracle.m_per_deg_lon(ORIGIN[0])
    return lat, lon


def lonlat(x, y):
    lat, lon = to_ll(x, y)
    return [lon, lat]


def write(name, text):
    with open(os.path.join(HERE, name), "w") as f:
        f.write(text)


def network():
    feats = []

    def seg(a, b, highway):
        feats.append({
            "type": "Feature",
            "properties": {"highway": highway},
            "geometry": {"type": "LineString", "coordinates": [lonlat(*a), lonlat(*b)]},
        })

    row_type = {0: "tertiary", 100: "secondary", 200: "residential"}
    for y in (0, 100, 200):
        for x in range(0, 500, 100):
            seg((x, y), (x + 100, y), row_type[y])
    for x in range(0, 600, 100):
        for y in (0, 100):
            seg((x, y), (x, y + 100), "residential")
    seg((100, 200), (100, 300), "living_street")
    seg((200, 0), (200, -100), "footway")
    seg((400, 200), (400, 300), "residential")
    return {"type": "FeatureCollection", "features": feats}


def sectors():
    def rect(name, x0, x1):
        ring = [lonlat(x0, -40), lonlat(x1, -40), lonlat(x1, 350), lonlat(x0, 350), lonlat(x0, -40)]
        return {"type": "Feature", "properties": {"name": name},
                "geometry": {"type": "Polygon", "coordinates": [ring]}}

    return {"type": "FeatureCollection", "features": [rect("A", -50, 260), rect("B", 260, 650)]}


POIS_A = [
    ("poi-a1", (40, 12), ["school", "point_of_interest"]),
    ("poi-a2", (160, 112), ["secondary_school"]),
    ("poi-a3", (112, 188), ["atm", "finance"]),
    ("poi-a4", (232, 22), ["hospital"]),
    ("poi-a5", (62, 148), ["cafe", "food"]),
]
POIS_B = [
    ("poi-b1", (312, 88), ["atm"]),
    ("poi-b2", (422, 12), ["store"]),
    ("poi-b3", (478, 188), ["parking"]),
    ("poi-b4", (362, 182), ["hindu_temple", "place_of_worship"]),
    ("poi-b5", (288, 42), ["heliport"]),
    ("poi-b6", (522, 112), ["gas_station"]),
]


def place(pid, xy, types):
    lat, lon = to_ll(*xy)
    return {"place_id": pid, "name": pid, "types": types, "geometry": {"location": {"lat": lat, "lng": lon}}}


def places(sector_doc, config):
    secs = oracle.load_sectors(sector_doc)
    recordings = []
    for (sid, ring), pois in zip(secs, (POIS_A, POIS_B)):
        (q,) = oracle.sample_points(ring, config["sample_spacing_m"])
        results = [place(*p) for p in pois]
        if sid == "A":
            # The eastern query reaches back over the sector line.
            results.append(place(*POIS_B[0]))
        recordings.append({
            "center": {"lat": q[0], "lon": q[1]},
            "radius_m": config["query_radius_m"],
            "response": {"status": "OK", "results": results},
        })
    return {"match_tolerance_m": 1.0, "recordings": recordings}


def streetview():
    panos = []
    for i, x in enumerate(range(-60, 301, 20)):
        for j, y in enumerate(range(-60, 361, 20)):
            lat, lon = to_ll(x, y)
            panos.append({"pano_id": f"pano-{i:02d}-{j:02d}", "location": {"lat": lat, "lon": lon}})
    return {"search_radius_m": 50.0, "panoramas": panos}


CONFIG = """\
# Mini-sector audit fixture. Paths are relative to this file.
network = "network.geojson"
sectors = "sectors.geojson"
labels = "labels.csv"
events = "events.jsonl"
fixtures_dir = "."
query_radius_m = 400
sample_spacing_m = 400
trace_budget_m = 250
cell_size_m = 70
coverage_threshold = 0.75
findings_min_severity = 2
workers = 2
"""

# (segment, type, severity, tags, position along the segment)
LABELS = [
    (0, "SurfaceProblem", 3, "broken;cracks"),
    (0, "ObstacleInPath", 2, "parked car"),
    (1, "Crosswalk", 1, "paint fading"),
    (3, "MissingCurbRamp", 2, "no alternate route"),
    (5, "CurbStyle", 1, ""),
    (6, "NoSidewalk", 3, "street has no sidewalk"),
    (7, "PedestrianSignal", 2, "one button"),
    (11, "ObstacleInPath", 1, "drainage"),
    (15, "SurfaceProblem", 2, "uneven/slanted"),
    (16, "Crosswalk", 1, ""),
    (18, "SurfaceProblem", 1, "bumpy"),
    (19, "ObstacleInPath", 3, "carts;pole"),
]


def labels(edges):
    lines = ["label_id,segment_id,label_type,severity,tags,lat,lon,pano_id"]
    for i, (sid, kind, sev, tags) in enumerate(LABELS):
        e = edges[sid]
        lat = (e["a"][0] + e["b"][0]) / 2
        lon = (e["a"][1] + e["b"][1]) / 2
        lines.append(f"L{i + 1:03d},{sid},{kind},{sev},{tags},{lat:.7f},{lon:.7f},pano-label-{i + 1:03d}")
    return "\n".join(lines) + "\n"


EVENTS = [
    ("mission_start", 0), ("segment_change", 0), ("segment_change", 1), ("segment_change", 1),
    ("segment_change", 2), ("jump", 19), ("segment_change", 19), ("segment_change", 4), ("jump", 1),
]


def main():
    config = {k.strip(): json.loads(v) for k, v in
              (l.split("=", 1) for l in CONFIG.splitlines() if "=" in l and not l.startswith("#"))}
    net = network()
    sec = sectors()
    write("network.geojson", json.dumps(net, indent=1) + "\n")
    write("sectors.geojson", json.dumps(sec, indent=1) + "\n")
    write("places.json", json.dumps(places(sec, config), indent=1) + "\n")
    write("streetview.json", json.dumps(streetview(), indent=1) + "\n")
    write("config.toml", CONFIG)
    write("events.jsonl", "".join(json.dumps({"kind": k, "segment_id": s}) + "\n" for k, s in EVENTS))

    _, edges = oracle.build_network(net)
    write("labels.csv", labels(edges))

    _, fractions, pois, _ = oracle.run()
    near = {k: f for k, f in fractions.items() if abs(f - config["coverage_threshold"]) < 0.02}
    assert not near, f"fractions too close to the threshold: {near}"
    corpus = {e for p in pois for e in p["segments"]}
    stray = [l for l in LABELS if l[0] not in corpus]
    assert not stray, f"labels on unscored segments: {stray}"


if __name__ == "__main__":
    main()
