#!/usr/bin/env python3
"""Sweep the parallel family of a perturbed Wulff surface and print the
gauge invariants: the Laguerre functional, the discriminant invariant I and
their ratio stay constant along q + t tau while the energy varies."""

import argparse

import numpy as np

from anisphere.calculus import ScalarField, real_sph_harm
from anisphere.laguerre import (
    energy,
    gauge_invariant_I,
    laguerre_functional,
)
from anisphere.mesh import build_icosphere
from anisphere.norms import norm_from_spec
from anisphere.surfaces import from_support, parallel_support


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subdiv", type=int, default=5)
    ap.add_argument("--a", type=float, default=0.3, help="axisymmetric profile")
    ap.add_argument("--eps", type=float, default=0.05, help="Y20 perturbation")
    ap.add_argument("--t-range", default="-0.5:1.0:0.25")
    ap.add_argument("--csv", default=None, help="optional output CSV path")
    args = ap.parse_args()

    mesh = build_icosphere(args.subdiv)
    norm = norm_from_spec({"kind": "axisymmetric", "a": args.a}, mesh)
    q = ScalarField(mesh, norm.tau.values
                    + args.eps * real_sph_harm(2, 0, mesh.vertices))

    lo, hi, step = (float(x) for x in args.t_range.split(":"))
    ts = np.arange(lo, hi + step / 2, step)
    rows = []
    print(f"{'t':>6} {'L':>14} {'I':>14} {'I/L':>12} {'energy':>12}")
    for t in ts:
        s = from_support(parallel_support(q, t, norm), norm)
        L = laguerre_functional(s)
        I = gauge_invariant_I(s)
        print(f"{t:6.2f} {L:14.8e} {I:14.8e} {I / L:12.6f} {energy(s):12.6f}")
        rows.append((t, L, I, I / L, energy(s)))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("param,L,I,ratio,energy\n")
            for r in rows:
                fh.write(",".join(format(x, ".17g") for x in r) + "\n")
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
