#!/usr/bin/env python3
"""Mesh a planar straight-line graph exported by `porestokes pslg`.

Runs Shewchuk's Triangle (through the `triangle` Python package) with
segment splitting disabled so the exported boundary and interface sampling
is kept, then writes `.node`, `.ele` and `.edge` files in the format read by
`porestokes::mesh::read_mesh`.

    porestokes pslg --geometry crates/core/fixtures/model-problem.json \
        --h 0.1 --out /tmp/pslg
    python3 tools/mesh_fixture.py /tmp/pslg/pslg.json crates/core/fixtures/model-problem
"""

import argparse
import json
import math
import sys

import triangle

MARKER_WALL, MARKER_INLET, MARKER_OUTLET, MARKER_INTERFACE = 1, 2, 3, 10


def tag_for(marker):
    if marker == MARKER_WALL:
        return "W"
    if marker == MARKER_INLET:
        return "IN"
    if marker == MARKER_OUTLET:
        return "OUT"
    if marker >= MARKER_INTERFACE:
        return "I%d" % (marker - MARKER_INTERFACE + 1)
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("pslg", help="pslg.json written by `porestokes pslg`")
    ap.add_argument("stem", help="output path without extension")
    ap.add_argument("--min-angle", type=float, default=28.0)
    ap.add_argument("--source", default=None, help="geometry file named in the header")
    args = ap.parse_args()

    with open(args.pslg) as fh:
        g = json.load(fh)
    h = g["h"]
    max_area = math.sqrt(3.0) / 4.0 * h * h
    data = {
        "vertices": g["vertices"],
        "segments": g["segments"],
        "segment_markers": [[m] for m in g["segment_markers"]],
    }
    if g["holes"]:
        data["holes"] = g["holes"]
    if g["regions"]:
        # Triangle treats attribute 0 as "no region"; shift labels by one.
        data["regions"] = [[x, y, label + 1, 0.0] for x, y, label in g["regions"]]
    switches = "pq%gYYAea%.10g" % (args.min_angle, max_area)
    out = triangle.triangulate(data, switches)

    verts = out["vertices"]
    tris = out["triangles"]
    attrs = out.get("triangle_attributes")
    if attrs is None:
        sys.exit("no region attributes: the PSLG carries no pore seeds")
    labels = [int(round(a[0])) - 1 for a in attrs]
    if min(labels) < 0:
        sys.exit("some triangles are not reachable from any pore seed")
    if sorted(set(labels)) != list(range(len(g["regions"]))):
        sys.exit("pore seeds do not map one-to-one onto enclosed regions")

    edges = []
    for (a, b), (m,) in zip(out["edges"], out["edge_markers"]):
        tag = tag_for(int(m))
        if tag is not None:
            edges.append((a, b, tag))

    header = [
        "# generated by tools/mesh_fixture.py from %s" % (args.source or args.pslg),
        "# mesher: Triangle (python package 'triangle' %s), switches %s"
        % (getattr(triangle, "__version__", "unknown"), switches),
    ]
    with open(args.stem + ".node", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("# h %r\n" % h)
        fh.write("%d 2 0 0\n" % len(verts))
        for i, (x, y) in enumerate(verts):
            fh.write("%d %r %r\n" % (i + 1, float(x), float(y)))
    with open(args.stem + ".ele", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("%d 3 1\n" % len(tris))
        for i, (t, lab) in enumerate(zip(tris, labels)):
            fh.write("%d %d %d %d %d\n" % (i + 1, t[0] + 1, t[1] + 1, t[2] + 1, lab))
    with open(args.stem + ".edge", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("%d 1\n" % len(edges))
        for i, (a, b, tag) in enumerate(edges):
            fh.write("%d %d %d %s\n" % (i + 1, a + 1, b + 1, tag))
    print(
        "%s: %d vertices, %d triangles, %d pores"
        % (args.stem, len(verts), len(tris), len(g["regions"]))
    )


if __name__ == "__main__":
    main()
