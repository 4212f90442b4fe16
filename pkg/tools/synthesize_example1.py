"""Place ten ground users whose coverage graph is the 10-user toy adjacency.

Only the adjacency matrix of the toy example is published, not the user
coordinates. This script searches for coordinates inside the scenario area
that realize the matrix with a safety margin on every pairwise view angle,
then writes them to ``src/beamplace/data/example1.json``.

    python tools/synthesize_example1.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from beamplace.geometry import GeoPoint, SatellitePose, view_angle_matrix

# Published row 9 omits the 4-9 edge that row 4, the clique lists and the
# final partition all contain; the symmetric form is used.
ADJACENCY = [
    [1, 0, 1, 1, 1, 0, 1, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 1, 0, 1],
    [1, 1, 1, 1, 0, 1, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 0, 0, 0, 1, 0],
    [1, 0, 0, 1, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 1, 0, 1, 0, 0],
    [1, 0, 0, 0, 1, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0, 0, 0, 1, 0, 1],
]
SATELLITE = SatellitePose(GeoPoint(0.0, -88.7), 8063.0)
HALF_BEAMWIDTH = 1.6
MARGIN = 0.15
OUT = Path(__file__).resolve().parents[1] / "src" / "beamplace" / "data" / "example1.json"


def loss(flat, adj):
    pts = [GeoPoint(la, lo) for la, lo in flat.reshape(-1, 2)]
    ang = view_angle_matrix(SATELLITE, pts)
    iu = np.triu_indices(len(pts), 1)
    a = ang[iu]
    want = adj[iu].astype(bool)
    too_far = np.clip(a - (HALF_BEAMWIDTH - MARGIN), 0, None)[want]
    too_near = np.clip((HALF_BEAMWIDTH + MARGIN) - a, 0, None)[~want]
    return float(np.sum(too_far**2) + np.sum(too_near**2))


def main():
    adj = np.array(ADJACENCY)
    rng = np.random.default_rng(2023)
    for attempt in range(200):
        x0 = np.column_stack([rng.uniform(32, 38, 10), rng.uniform(-118, -112, 10)]).ravel()
        bounds = [(30.0, 40.0), (-120.0, -110.0)] * 10
        res = minimize(loss, x0, args=(adj,), method="L-BFGS-B", bounds=bounds, options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12})
        if res.fun == 0.0:
            coords = np.round(res.x.reshape(-1, 2), 4)
            if loss(coords.ravel(), adj) == 0.0:
                break
    else:
        raise SystemExit("no realization found")
    pts = [GeoPoint(*c) for c in coords]
    ang = view_angle_matrix(SATELLITE, pts)
    mism = np.argwhere((ang <= HALF_BEAMWIDTH).astype(int) != adj)
    assert len(mism) == 0, (mism, np.round(ang, 3), loss(coords.ravel(), adj))
    doc = {
        "satellite": {"lat": 0.0, "lon": -88.7, "altitude_km": 8063.0},
        "half_beamwidth_deg": HALF_BEAMWIDTH,
        "users": [[float(la), float(lo)] for la, lo in coords],
        "adjacency": ADJACENCY,
        "note": "adjacency is the published 10-user matrix with the missing (9, 4) entry restored",
    }
    OUT.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"attempt {attempt}: wrote {OUT}")
    print(np.round(ang, 3))


if __name__ == "__main__":
    main()
