#!/usr/bin/env python3
"""Clamped fourth-order solve on a spherical cap: boundary data sampled from
a known solution of the Euler-Lagrange equation is reproduced in the
interior."""

import argparse

import numpy as np

from anisphere.elsolve import build_cap, solve_cap
from anisphere.mesh import build_icosphere
from anisphere.norms import norm_from_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subdiv", type=int, default=5)
    ap.add_argument("--a", type=float, default=0.3)
    ap.add_argument("--radius", type=float, default=1.1)
    ap.add_argument("--boundary", choices=["wulff", "linear"], default="wulff")
    args = ap.parse_args()

    mesh = build_icosphere(args.subdiv)
    if args.boundary == "wulff":
        norm = norm_from_spec({"kind": "axisymmetric", "a": args.a}, mesh)
        q_star = norm.tau.values
    else:
        norm = norm_from_spec({"kind": "isotropic"}, mesh)
        q_star = 1.0 + 0.2 * mesh.vertices[:, 2]

    cap = build_cap(mesh, (0.0, 0.0, 1.0), args.radius)
    q_cap, report = solve_cap(norm, cap, q_star[cap.rings])
    err = np.abs(q_cap - q_star[cap.cap]).max()
    print(f"cap: {len(cap.interior)} interior vertices, "
          f"{len(cap.rings)} clamped ring vertices")
    print(f"solve residual: {report['residual']:.3e}")
    print(f"max interior error vs known solution: {err:.3e}")
    for w in report["kernel_warnings"]:
        print(f"note: {w}")


if __name__ == "__main__":
    main()
