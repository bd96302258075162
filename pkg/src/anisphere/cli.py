"""Command-line interface: one subcommand per pipeline.

Every command validates its config against the shipped JSON schemas, runs
deterministically for a fixed config, and writes OBJ / CSV / JSON outputs
atomically (no partial files on failure).  Failures map to documented exit
codes: 2 validation, 3 convexity, 4 curvature degeneracy, 5 spacelike,
6 CFL, 7 solver.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .calculus import ScalarField, random_band_limited
from .config import RunConfig, validate, write_json_atomic, write_text_atomic
from .congruence import (
    canal_alpha_residual,
    canal_envelope,
    canal_incidence_residual,
    curve_from_spec,
)
from .elsolve import build_cap, solve_cap
from .errors import (
    CFLViolationError,
    ConvexityError,
    DegenerateError,
    InfiniteRadiusError,
    NonConvexInputError,
    NotSpacelikeError,
    PositivityError,
    SingularCurvatureError,
    SolverError,
    ValidationError,
)
from .laguerre import compare_wavefronts, invariant_report
from .mesh import build_icosphere, write_field_csv, write_obj
from .norms import cahn_hoffman_map, norm_from_spec, wulff_volume
from .propagate import extract_front, huygens_check
from .surfaces import (
    ParametricPatch,
    from_support,
    parallel_support,
    patch_anisotropic_curvatures,
    surface_from_spec,
)

EXIT_VALIDATION = 2
EXIT_CONVEXITY = 3
EXIT_CURVATURE = 4
EXIT_SPACELIKE = 5
EXIT_CFL = 6
EXIT_SOLVER = 7


def _load_config(args):
    """Merge config file values with CLI flags (flags win) into a RunConfig."""
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        validate(data, "run")
    for key in ("norm", "surface", "surface2", "curve"):
        flag = getattr(args, key.replace("2", "_b") if key == "surface2" else key, None)
        if flag:
            data[key] = json.loads(flag)
    for key in ("subdiv", "seed", "out", "t", "grid", "sweep", "scale",
                "tol_rel", "samples", "ring_points", "cap_radius", "boundary",
                "lmax"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "cap_center", None):
        data["cap_center"] = [float(x) for x in args.cap_center.split(",")]
    if getattr(args, "levels", None):
        data["levels"] = [int(x) for x in args.levels.split(",")]
    validate(data, "run")
    validate(data.get("norm", {"kind": "isotropic"}), "norm")
    for key in ("surface", "surface2"):
        if key in data:
            validate(data[key], "surface")
    if "curve" in data:
        validate(data["curve"], "curve")
    cfg = RunConfig(command=args.command, data=data)
    os.makedirs(cfg.out, exist_ok=True)
    return cfg


def _build_norm(cfg):
    mesh = build_icosphere(cfg.subdiv)
    return norm_from_spec(cfg.norm, mesh)


def _out(cfg, name):
    return os.path.join(cfg.out, name)


# -- commands -------------------------------------------------------------------

def cmd_norm(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    W = cahn_hoffman_map(norm)
    W.save_obj(_out(cfg, "wulff.obj"))
    write_field_csv(_out(cfg, "kw.csv"), norm.mesh, norm.kW.values)
    B = norm.B
    tr = B[:, 0, 0] + B[:, 1, 1]
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    eig_min = 0.5 * (tr - np.sqrt(np.maximum(tr ** 2 - 4 * det, 0.0)))
    report = {
        "norm": cfg.norm,
        "subdiv": cfg.subdiv,
        "convex": True,
        "min_eigenvalue": float(eig_min.min()),
        "tau_min": float(norm.tau.values.min()),
        "tau_max": float(norm.tau.values.max()),
        "wulff_volume": wulff_volume(norm),
    }
    write_json_atomic(_out(cfg, "norm_report.json"), report)
    print(f"wrote wulff.obj, kw.csv, norm_report.json to {cfg.out}")
    return 0


def _build_surface(cfg, norm, key="surface"):
    spec = cfg.get(key)
    if spec is None:
        raise ValidationError(f"missing {key!r} spec")
    obj = surface_from_spec(spec, norm)
    if isinstance(obj, ParametricPatch):
        return obj
    if "scale" in cfg and key == "surface":
        obj = from_support(ScalarField(norm.mesh, cfg["scale"] * obj.q.values), norm)
    return obj


def cmd_surface(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    obj = _build_surface(cfg, norm)
    if isinstance(obj, ParametricPatch):
        l1, l2, Lam, eta = patch_anisotropic_curvatures(obj, norm)
        verts = obj.X.reshape(-1, 3)
        nu_count, nv_count = obj.X.shape[:2]
        faces = []
        for i in range(nu_count - 1):
            for j in range(nv_count - 1):
                a = i * nv_count + j
                faces.append([a, a + 1, a + nv_count])
                faces.append([a + 1, a + nv_count + 1, a + nv_count])
        write_obj(_out(cfg, "surface.obj"), verts, np.array(faces))
        report = {
            "kind": "patch",
            "max_abs_Lambda": float(np.abs(Lam).max()),
            "max_abs_eta": float(np.abs(eta).max()),
        }
        write_json_atomic(_out(cfg, "surface_report.json"), report)
    else:
        obj.save_obj(_out(cfg, "surface.obj"))
        rows = ["vertex,x,y,z,q,lambda1,lambda2,eta"]
        for i, p in enumerate(norm.mesh.vertices):
            rows.append(
                f"{i},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},"
                f"{obj.q.values[i]:.17g},{obj.lambda1.values[i]:.17g},"
                f"{obj.lambda2.values[i]:.17g},{obj.eta.values[i]:.17g}"
            )
        write_text_atomic(_out(cfg, "surface_fields.csv"), "\n".join(rows) + "\n")
        write_json_atomic(_out(cfg, "surface_report.json"), {
            "kind": "support",
            "eta_range": [float(obj.eta.values.min()), float(obj.eta.values.max())],
        })
    print(f"wrote surface.obj and report to {cfg.out}")
    return 0


def _parse_sweep(text):
    # format: t=-0.5:1.0:0.1
    key, rng = text.split("=")
    lo, hi, step = (float(x) for x in rng.split(":"))
    n = int(round((hi - lo) / step)) + 1
    return key, [lo + i * step for i in range(n)]


def cmd_invariants(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    surf = _build_surface(cfg, norm)
    if isinstance(surf, ParametricPatch):
        raise ValidationError("invariants require a closed support surface")
    report = invariant_report(surf)
    write_json_atomic(_out(cfg, "invariants.json"), report.to_dict())
    if cfg.get("sweep"):
        key, values = _parse_sweep(cfg["sweep"])
        rows = ["param,L,I,ratio,energy"]
        for t in values:
            st = from_support(parallel_support(surf.q, t, norm), norm)
            rep = invariant_report(st)
            ratio = rep.ratio if rep.ratio is not None else float("nan")
            rows.append(f"{t:.17g},{rep.laguerre:.17g},{rep.invariant_I:.17g},"
                        f"{ratio:.17g},{rep.energy:.17g}")
        write_text_atomic(_out(cfg, "sweep.csv"), "\n".join(rows) + "\n")
    print(f"laguerre = {report.laguerre:.6g}; wrote invariants.json to {cfg.out}")
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    s1 = _build_surface(cfg, norm, "surface")
    s2 = _build_surface(cfg, norm, "surface2")
    verdict = compare_wavefronts(s1.q, s2.q, norm, tol_rel=cfg.get("tol_rel", 0.05))
    write_json_atomic(_out(cfg, "compare.json"), verdict)
    print(verdict["verdict"])
    return 0


def cmd_canal(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    if "curve" not in cfg:
        raise ValidationError("missing 'curve' spec")
    curve = curve_from_spec(cfg["curve"], norm=norm)
    strip = canal_envelope(norm, curve, n_samples=cfg.get("samples", 40),
                           ring_points=cfg.get("ring_points", 100))
    strip.save_obj(_out(cfg, "canal.obj"))
    report = {
        "alpha_residual": canal_alpha_residual(norm, strip),
        "incidence_residual": canal_incidence_residual(norm, strip),
        "n_samples": int(len(strip.s_values)),
    }
    write_json_atomic(_out(cfg, "canal_report.json"), report)
    print(f"wrote canal.obj ({len(strip.s_values)} rings) to {cfg.out}")
    return 0


def cmd_propagate(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    surf = _build_surface(cfg, norm)
    t = cfg.get("t", 1.0)
    n = cfg.get("grid", 96)
    dist, grid = huygens_check(norm, surf, t, n=n)
    fv, ff = extract_front(grid)
    write_obj(_out(cfg, "front.obj"), fv, ff)
    grid.save_raw(_out(cfg, "grid.raw"))
    report = {
        "t": t,
        "grid": n,
        "spacing": grid.spacing,
        "hausdorff": dist,
        "hausdorff_over_2h": dist / (2 * grid.spacing),
    }
    write_json_atomic(_out(cfg, "huygens_report.json"), report)
    print(f"hausdorff(front, parallel) = {dist:.6g} (2h = {2 * grid.spacing:.6g})")
    return 0


def cmd_solve(args):
    cfg = _load_config(args)
    norm = _build_norm(cfg)
    mesh = norm.mesh
    center = cfg.get("cap_center", [0.0, 0.0, 1.0])
    radius = cfg.get("cap_radius", 1.1)
    region = build_cap(mesh, center, radius)
    boundary = cfg.get("boundary", "wulff")
    if boundary == "wulff":
        q_star = norm.tau.values
    elif boundary == "linear":
        q_star = 1.0 + 0.2 * mesh.vertices[:, 2]
    else:
        q_star = np.ones(mesh.n_vertices)
    q_cap, report = solve_cap(norm, region, q_star[region.rings])
    q_full = q_star.copy()
    q_full[region.cap] = q_cap
    write_field_csv(_out(cfg, "solution.csv"), mesh, q_full)
    surf = from_support(ScalarField(mesh, q_full), norm)
    surf.save_obj(_out(cfg, "solution.obj"))
    report["interior_vertices"] = int(len(region.interior))
    write_json_atomic(_out(cfg, "solve_report.json"), report)
    print(f"cap solve residual {report['residual']:.3g}; wrote solution to {cfg.out}")
    return 0


def cmd_ibp_check(args):
    cfg = _load_config(args)
    from .calculus import ibp_residual

    levels = cfg.get("levels", [3, 4, 5])
    lmax = cfg.get("lmax", 4)
    seed = cfg.seed
    rows = []
    for s in levels:
        mesh = build_icosphere(s)
        u = random_band_limited(mesh, lmax, seed)
        w = random_band_limited(mesh, lmax, seed + 1)
        z = random_band_limited(mesh, lmax, seed + 2)
        rows.append({"subdiv": s, "residual": ibp_residual(u, w, z)})
    report = {"lmax": lmax, "seed": seed, "levels": rows}
    write_json_atomic(_out(cfg, "ibp_report.json"), report)
    ok = all(rows[i]["residual"] > rows[i + 1]["residual"]
             for i in range(len(rows) - 1))
    print("ibp residuals:", ", ".join(f"s={r['subdiv']}: {r['residual']:.3e}"
                                      for r in rows),
          "(decreasing)" if ok else "(NOT decreasing)")
    return 0


# -- entry point -----------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--subdiv", type=int, help="sphere mesh subdivision level")
    p.add_argument("--seed", type=int, help="seed for any randomized fields")
    p.add_argument("--norm", "--spec", dest="norm", help="norm spec JSON string")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="anisphere",
        description="Incidence geometry of anisotropic spheres: Wulff shapes, "
                    "congruences, the Laguerre functional and its "
                    "Euler-Lagrange equation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="Wulff shape, curvature and convexity report")
    _add_common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("surface", help="build a surface and export mesh + fields")
    _add_common(p)
    p.add_argument("--surface", help="surface spec JSON string")
    p.add_argument("--scale", type=float, help="scale factor applied to q")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("invariants", help="Laguerre functional and gauge invariants")
    _add_common(p)
    p.add_argument("--surface", help="surface spec JSON string")
    p.add_argument("--scale", type=float, help="scale factor applied to q")
    p.add_argument("--sweep", help="parallel sweep, e.g. t=-0.5:1.0:0.1")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("compare", help="source discrimination between two fronts")
    _add_common(p)
    p.add_argument("--surface", help="first surface spec JSON")
    p.add_argument("--surface2", dest="surface_b", help="second surface spec JSON")
    p.add_argument("--scale", type=float)
    p.add_argument("--tol-rel", dest="tol_rel", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("canal", help="canal surface of a sphere curve")
    _add_common(p)
    p.add_argument("--curve", help="curve spec JSON string")
    p.add_argument("--samples", type=int, help="rings along the curve")
    p.add_argument("--ring-points", dest="ring_points", type=int)
    p.set_defaults(func=cmd_canal)

    p = sub.add_parser("propagate", help="Hamilton-Jacobi Huygens verification")
    _add_common(p)
    p.add_argument("--surface", help="source surface spec JSON")
    p.add_argument("--t", type=float, help="propagation time")
    p.add_argument("--grid", type=int, help="grid resolution per axis")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("solve", help="clamped Euler-Lagrange solve on a cap")
    _add_common(p)
    p.add_argument("--cap-center", dest="cap_center", help="x,y,z")
    p.add_argument("--cap-radius", dest="cap_radius", type=float)
    p.add_argument("--boundary", choices=["wulff", "linear", "constant"])
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ibp-check", help="Monge-Ampere integration-by-parts residuals")
    _add_common(p)
    p.add_argument("--lmax", type=int, help="band limit of the random fields")
    p.add_argument("--levels", help="comma-separated subdivision levels")
    p.set_defaults(func=cmd_ibp_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, json.JSONDecodeError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvexityError, PositivityError) as e:
        print(f"convexity error: {e}", file=sys.stderr)
        return EXIT_CONVEXITY
    except (SingularCurvatureError, DegenerateError, InfiniteRadiusError,
            NonConvexInputError) as e:
        print(f"curvature error: {e}", file=sys.stderr)
        return EXIT_CURVATURE
    except NotSpacelikeError as e:
        print(f"spacelike error: {e}", file=sys.stderr)
        return EXIT_SPACELIKE
    except CFLViolationError as e:
        print(f"CFL error: {e}", file=sys.stderr)
        return EXIT_CFL
    except SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
