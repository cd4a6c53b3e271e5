"""Generate the perforated unit-square meshes shipped in crates/ddfem/assets.

Requires the `triangle` package (Shewchuk's Triangle). Output uses the
`trimesh 2` ASCII format read by `ddfem::mesh_io`.

    python3 tools/gen_perforated_mesh.py
"""
import math
import sys
from pathlib import Path

import numpy as np
import triangle

LARGE = [(0.2, 0.15), (0.25, 0.55), (0.8, 0.2), (0.8, 0.75)]
SMALL = [(0.15, 0.85), (0.45, 0.8), (0.5, 0.25), (0.6, 0.5)]


def build(n_side, n_large, n_small, max_area):
    verts, segs, holes = [], [], []

    def loop(points):
        start = len(verts)
        verts.extend(points)
        m = len(points)
        segs.extend([(start + i, start + (i + 1) % m) for i in range(m)])

    square = []
    for i in range(n_side):
        square.append((i / n_side, 0.0))
    for i in range(n_side):
        square.append((1.0, i / n_side))
    for i in range(n_side):
        square.append((1.0 - i / n_side, 1.0))
    for i in range(n_side):
        square.append((0.0, 1.0 - i / n_side))
    loop(square)
    for centres, radius, m in ((LARGE, 0.1, n_large), (SMALL, 0.05, n_small)):
        for cx, cy in centres:
            loop([(cx + radius * math.cos(2 * math.pi * j / m),
                   cy + radius * math.sin(2 * math.pi * j / m)) for j in range(m)])
            holes.append((cx, cy))
    pslg = dict(vertices=np.array(verts), segments=np.array(segs), holes=np.array(holes))
    return triangle.triangulate(pslg, f"pq30a{max_area}")


def write(mesh, path):
    v = mesh["vertices"]
    t = mesh["triangles"]
    # orient counter-clockwise
    cells = []
    for a, b, c in t:
        area = (v[b][0] - v[a][0]) * (v[c][1] - v[a][1]) - (v[c][0] - v[a][0]) * (v[b][1] - v[a][1])
        cells.append((a, b, c) if area > 0 else (a, c, b))
    edges = {}
    for a, b, c in cells:
        for p, q in ((a, b), (b, c), (c, a)):
            key = (min(p, q), max(p, q))
            edges[key] = edges.get(key, 0) + 1
    boundary = []
    for (p, q), count in sorted(edges.items()):
        if count != 1:
            continue
        mx = 0.5 * (v[p][0] + v[q][0])
        tag = "d" if (mx < 1e-12 or mx > 1.0 - 1e-12) else "t"
        boundary.append((p, q, tag))
    with open(path, "w", newline="\n") as f:
        f.write("trimesh 2\n")
        f.write(f"vertices {len(v)}\n")
        for x, y in v:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"cells {len(cells)}\n")
        for a, b, c in cells:
            f.write(f"{int(a)} {int(b)} {int(c)}\n")
        f.write(f"boundary {len(boundary)}\n")
        for p, q, tag in boundary:
            f.write(f"{int(p)} {int(q)} {tag}\n")
    print(f"{path}: {len(v)} vertices, {len(cells)} cells", file=sys.stderr)


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "crates" / "ddfem" / "assets"
    write(build(16, 24, 24, 0.0012), out / "perforated_coarse.msh")
    write(build(28, 40, 40, 0.0005), out / "perforated.msh")
