#!/usr/bin/env python3
"""Generate the spacer-obstructed channel mesh as a Gmsh 2.2 ASCII file.

The channel [0, L] x [0, d] has its membrane at y = 0, a wall at y = d,
inflow at x = 0 and outflow at x = L. A cylindrical spacer touches the
membrane at x = xc; a thin gap of `gap` metres is kept at the tangent point
so that the domain stays a proper polygon. The spacer boundary is tagged as
a wall.

Cells are sized by a distance function: fine next to the membrane and the
spacer, coarse in the bulk. Triangle refines in a few passes toward it.
"""

import argparse
import sys

import numpy as np
import triangle

TAGS = {"inlet": 1, "outlet": 2, "wall": 3, "membrane": 4}


def size_field(cfg, pts):
    x, y = pts[:, 0], pts[:, 1]
    r = 0.5 * cfg.diameter
    cy = r + cfg.gap
    dist_circle = np.hypot(x - cfg.xc, y - cy) - r
    h_membrane = cfg.h_membrane + cfg.growth * y
    h_circle = cfg.h_spacer + cfg.growth * np.maximum(dist_circle, 0.0)
    return np.minimum(np.minimum(h_membrane, h_circle), cfg.h_bulk)


def boundary_points(cfg, a, b, n_min=2):
    """Points from a to b (exclusive of b) spaced by the size field."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    length = np.linalg.norm(b - a)
    s, out = 0.0, []
    while s < length - 1e-15:
        p = a + (b - a) * (s / length)
        out.append(p)
        h = float(size_field(cfg, p[None, :])[0])
        s += h
    if len(out) < n_min:
        out = [a + (b - a) * t for t in np.linspace(0.0, 1.0, n_min, endpoint=False)]
    # Stretch so the last interval matches the others' scale.
    ts = np.array([np.linalg.norm(p - a) for p in out]) / s
    return [a + (b - a) * t for t in ts]


def build(cfg):
    r = 0.5 * cfg.diameter
    cy = r + cfg.gap
    corners = [(0.0, 0.0), (cfg.L, 0.0), (cfg.L, cfg.d), (0.0, cfg.d)]
    side_tags = ["membrane", "outlet", "wall", "inlet"]
    vertices, segments, seg_tags = [], [], []
    for i, tag in enumerate(side_tags):
        pts = boundary_points(cfg, corners[i], corners[(i + 1) % 4])
        start = len(vertices)
        vertices.extend(pts)
        for j in range(len(pts)):
            segments.append((start + j, start + j + 1))
            seg_tags.append(tag)
    segments[-1] = (segments[-1][0], 0)

    # Spacer: angular spacing follows the local size field on the circle.
    angles, phi = [], -0.5 * np.pi
    while phi < 1.5 * np.pi - 1e-12:
        angles.append(phi)
        p = np.array([[cfg.xc + r * np.cos(phi), cy + r * np.sin(phi)]])
        phi += float(size_field(cfg, p)[0]) / r
    angles = np.array(angles)
    angles = -0.5 * np.pi + (angles + 0.5 * np.pi) * (2.0 * np.pi / (phi + 0.5 * np.pi))
    start = len(vertices)
    for phi in angles:
        vertices.append(np.array([cfg.xc + r * np.cos(phi), cy + r * np.sin(phi)]))
    n = len(angles)
    for j in range(n):
        segments.append((start + j, start + (j + 1) % n))
        seg_tags.append("wall")

    marker_of = {tag: TAGS[tag] for tag in TAGS}
    geom = {
        "vertices": np.array(vertices),
        "segments": np.array(segments),
        "segment_markers": np.array([[marker_of[t]] for t in seg_tags]),
        "holes": np.array([[cfg.xc, cy]]),
    }
    h0 = cfg.h_bulk
    mesh = triangle.triangulate(geom, "pq30a%.6g" % (0.5 * h0 * h0))
    for _ in range(cfg.passes):
        tri = mesh["triangles"]
        cent = mesh["vertices"][tri].mean(axis=1)
        h = size_field(cfg, cent)
        mesh["triangle_max_area"] = (0.5 * h * h)[:, None]
        mesh = triangle.triangulate(mesh, "rpq30a")
    return mesh


def classify_edges(cfg, mesh):
    """Boundary edges tagged from the refined segment markers."""
    out = []
    markers = {v: k for k, v in TAGS.items()}
    for (a, b), m in zip(mesh["segments"], mesh["segment_markers"][:, 0]):
        if m in markers:
            out.append((int(a), int(b), markers[m]))
    return out


def write_gmsh(path, mesh, edges):
    v = mesh["vertices"]
    tri = mesh["triangles"].copy()
    # Counterclockwise cells.
    p0, p1, p2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    flip = area < 0
    tri[flip, 1], tri[flip, 2] = tri[flip, 2], tri[flip, 1].copy()
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write("$PhysicalNames\n%d\n" % len(TAGS))
        for name, tid in TAGS.items():
            f.write('1 %d "%s"\n' % (tid, name))
        f.write("$EndPhysicalNames\n$Nodes\n%d\n" % len(v))
        for i, (x, y) in enumerate(v):
            f.write("%d %.17g %.17g 0\n" % (i + 1, x, y))
        f.write("$EndNodes\n$Elements\n%d\n" % (len(edges) + len(tri)))
        eid = 1
        for a, b, tag in edges:
            f.write("%d 1 2 %d %d %d %d\n" % (eid, TAGS[tag], TAGS[tag], a + 1, b + 1))
            eid += 1
        for t in tri:
            f.write("%d 2 2 0 1 %d %d %d\n" % (eid, t[0] + 1, t[1] + 1, t[2] + 1))
            eid += 1
        f.write("$EndElements\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--L", type=float, default=1.5e-2)
    ap.add_argument("--d", type=float, default=1e-3)
    ap.add_argument("--diameter", type=float, default=3.6e-4)
    ap.add_argument("--xc", type=float, default=7.5e-3)
    ap.add_argument("--gap", type=float, default=4e-6)
    ap.add_argument("--h-membrane", dest="h_membrane", type=float, default=2.5e-5)
    ap.add_argument("--h-spacer", dest="h_spacer", type=float, default=4e-6)
    ap.add_argument("--h-bulk", dest="h_bulk", type=float, default=1.2e-4)
    ap.add_argument("--growth", type=float, default=0.25)
    ap.add_argument("--passes", type=int, default=4)
    cfg = ap.parse_args(argv)
    mesh = build(cfg)
    edges = classify_edges(cfg, mesh)
    write_gmsh(cfg.out, mesh, edges)
    counts = {}
    for _, _, t in edges:
        counts[t] = counts.get(t, 0) + 1
    print("%d vertices, %d triangles, boundary edges %s" % (len(mesh["vertices"]), len(mesh["triangles"]), counts),
          file=sys.stderr)


if __name__ == "__main__":
    main()
