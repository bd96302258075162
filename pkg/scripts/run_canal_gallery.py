#!/usr/bin/env python3
"""Export the Wulff shape and two canal surfaces over a helix source: one
constant-radius tube and one with linearly growing radius."""

import argparse
import os

from anisphere.congruence import canal_envelope, curve_from_spec
from anisphere.mesh import build_icosphere
from anisphere.norms import cahn_hoffman_map, norm_from_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subdiv", type=int, default=5)
    ap.add_argument("--a", type=float, default=0.3)
    ap.add_argument("--out", default="canal_gallery")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    mesh = build_icosphere(args.subdiv)
    norm = norm_from_spec({"kind": "axisymmetric", "a": args.a}, mesh)

    cahn_hoffman_map(norm).save_obj(os.path.join(args.out, "wulff.obj"))

    tube_curve = curve_from_spec(
        {"kind": "helix", "radius": 1.0, "pitch": 0.25, "t": 0.5,
         "s_range": [0.0, 4 * 3.14159]}, norm=norm)
    tube = canal_envelope(norm, tube_curve, n_samples=80, ring_points=100)
    tube.save_obj(os.path.join(args.out, "canal_tube.obj"))

    ramp_curve = curve_from_spec(
        {"kind": "helix", "radius": 1.0, "pitch": 0.0, "t": 0.2,
         "t_rate": 0.2, "s_range": [0.0, 4.0]}, norm=norm)
    ramp = canal_envelope(norm, ramp_curve, n_samples=60, ring_points=100)
    ramp.save_obj(os.path.join(args.out, "canal_ramp.obj"))

    print(f"wrote wulff.obj, canal_tube.obj, canal_ramp.obj to {args.out}/")


if __name__ == "__main__":
    main()
