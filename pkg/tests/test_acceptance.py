"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured numbers (run with -s to see them inline).

Criteria with stated runtime budgets build everything they need inside the
timed window.
"""

import time

import numpy as np
import pytest

from anisphere.calculus import (
    ScalarField,
    ibp_residual,
    laplace,
    random_band_limited,
    real_sph_harm,
)
from anisphere.congruence import (
    SphereCongruence,
    canal_alpha_residual,
    canal_envelope,
    curvature_congruences,
    curve_from_spec,
    envelope_residuals,
    horizontal_singular_values,
    middle_congruence,
    middle_trace_residual,
    SphereCurve,
)
from anisphere.elsolve import assemble_F, first_variation, laguerre_fd_variation
from anisphere.laguerre import (
    area_W,
    compare_wavefronts,
    energy,
    gauge_invariant_I,
    laguerre_functional,
)
from anisphere.mesh import build_icosphere
from anisphere.norms import norm_from_spec
from anisphere.propagate import huygens_check
from anisphere.surfaces import (
    ellipsoid_support,
    from_support,
    helicoid_patch,
    parallel_support,
    patch_anisotropic_curvatures,
)


def _report(name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def ani5(norm_cache):
    return norm_cache(5, "axisymmetric", a=0.3)


@pytest.fixture(scope="module")
def iso5(norm_cache):
    return norm_cache(5, "isotropic")


@pytest.fixture(scope="module")
def pert5(ani5):
    q = ScalarField(ani5.mesh,
                    ani5.tau.values + 0.05 * real_sph_harm(2, 0, ani5.mesh.vertices))
    return from_support(q, ani5)


def test_ac01_laplacian_spectrum():
    t0 = time.monotonic()
    errs = {}
    for s in (4, 5):
        mesh = build_icosphere(s)
        worst = 0.0
        for l in (1, 2, 3):
            for m_ord in range(-l, l + 1):
                y = real_sph_harm(l, m_ord, mesh.vertices)
                lap = laplace(ScalarField(mesh, y)).values
                rel = np.abs(lap + l * (l + 1) * y).max() / (
                    l * (l + 1) * np.abs(y).max())
                worst = max(worst, rel)
        errs[s] = worst
    elapsed = time.monotonic() - t0
    ratio = errs[4] / errs[5]
    ok = errs[5] <= 1e-2 and ratio >= 3.0 and elapsed < 10.0
    _report("AC1 operator spectrum",
            ok,
            f"max rel err s=5: {errs[5]:.3e} (<= 1e-2), "
            f"s4/s5 ratio: {ratio:.2f} (>= 3), runtime {elapsed:.1f}s (< 10s)")


def test_ac02_wulff_minimality(iso5, ani5):
    vals = {}
    for name, norm in (("isotropic", iso5), ("a=0.3", ani5)):
        W = from_support(ScalarField(norm.mesh, norm.tau.values.copy()), norm)
        vals[name] = abs(laguerre_functional(W)) / area_W(norm)
    ok = all(v <= 1e-4 for v in vals.values())
    _report("AC2 Wulff minimality", ok,
            "L(tau)/area(W) = " + ", ".join(f"{k}: {v:.2e}" for k, v in vals.items())
            + " (<= 1e-4)")


def test_ac03_gauge_invariance(ani5, pert5):
    L0 = laguerre_functional(pert5)
    rels = []
    for t in (-0.5, 0.3, 1.0):
        st = from_support(parallel_support(pert5.q, t, ani5), ani5)
        rels.append(abs(laguerre_functional(st) - L0) / L0)
    ok = max(rels) <= 1e-2
    _report("AC3 gauge invariance", ok,
            f"max |L(q+t tau) - L(q)|/L(q) = {max(rels):.2e} (<= 1e-2)")


def test_ac04_quadratic_scaling(ani5, pert5):
    L0 = laguerre_functional(pert5)
    s2 = from_support(ScalarField(ani5.mesh, 2.0 * pert5.q.values), ani5)
    rel = abs(laguerre_functional(s2) - 4 * L0) / (4 * L0)
    ok = rel <= 1e-6
    _report("AC4 quadratic scaling", ok,
            f"|L(2q) - 4 L(q)| / 4L(q) = {rel:.2e} (<= 1e-6)")


def test_ac05_euler_lagrange(iso5, ani5, pert5):
    # F[tau] residual
    F_ani = assemble_F(ani5)
    r_tau = np.abs(F_ani(ani5.tau.values)).max() / np.abs(ani5.tau.values).max()
    # isotropic F vs Lap(Lap+2) on band-limited q, plus the l=3 eigenvalue
    F_iso = assemble_F(iso5)
    q = random_band_limited(iso5.mesh, 4, 7)
    lap = iso5.mesh.ops["lap"]
    ref = lap @ (lap @ q.values + 2 * q.values)
    r_comp = np.abs(F_iso(q.values) - ref).max() / max(np.abs(ref).max(), 1.0)
    y3 = real_sph_harm(3, 0, iso5.mesh.vertices)
    r = F_iso(y3) - 120 * y3
    r_eig = np.sqrt(iso5.mesh.weights @ r ** 2) / np.sqrt(
        iso5.mesh.weights @ (120 * y3) ** 2)
    # first variation vs centered finite difference
    qdot = random_band_limited(ani5.mesh, 3, 11)
    fv = first_variation(ani5, pert5.q, qdot)
    fd = laguerre_fd_variation(ani5, pert5.q, qdot, eps=1e-4)
    r_var = abs(fv - fd) / abs(fd)
    ok = r_tau <= 1e-3 and r_comp <= 3e-2 and r_eig <= 3e-2 and r_var <= 1e-2
    _report("AC5 Euler-Lagrange checks", ok,
            f"F[tau] {r_tau:.2e} (<= 1e-3); iso composition {r_comp:.2e}; "
            f"l=3 eigenvalue {r_eig:.2e} (<= 3e-2); "
            f"first variation vs FD {r_var:.2e} (<= 1e-2)")


def test_ac06_helicoid_criticality():
    t0 = time.monotonic()
    mesh = build_icosphere(5)
    ani = norm_from_spec({"kind": "axisymmetric", "a": 0.3}, mesh)
    patch = helicoid_patch(0.3, (0.5, 1.5), (0.0, 2 * np.pi), 60, 240)
    _, _, Lam, eta = patch_anisotropic_curvatures(patch, ani)
    elapsed = time.monotonic() - t0
    m_l, m_e = np.abs(Lam).max(), np.abs(eta).max()
    ok = m_l <= 5e-3 and m_e <= 5e-3 and elapsed < 30.0
    _report("AC6 helicoid criticality", ok,
            f"max|Lambda| = {m_l:.2e}, max|eta| = {m_e:.2e} (<= 5e-3), "
            f"runtime {elapsed:.1f}s (< 30s)")


def test_ac07_ibp_identity(mesh_cache):
    # seeded band-limited fields at unit sup norm; absolute bound at s=5
    m5 = mesh_cache(5)
    u = random_band_limited(m5, 2, 42)
    w = random_band_limited(m5, 2, 43)
    z = random_band_limited(m5, 2, 44)
    r5 = ibp_residual(u, w, z)
    # refinement study with the l <= 4 seed-42 family
    res = []
    for s in (3, 4, 5):
        m = mesh_cache(s)
        res.append(ibp_residual(random_band_limited(m, 4, 42),
                                random_band_limited(m, 4, 43),
                                random_band_limited(m, 4, 44)))
    decreasing = res[0] > res[1] > res[2]
    ok = r5 <= 1e-3 and decreasing
    _report("AC7 integration by parts", ok,
            f"residual s=5: {r5:.2e} (<= 1e-3); refinement l<=4: "
            + " > ".join(f"{x:.2e}" for x in res))


def test_ac08_gauge_invariant_I(iso5, ani5, pert5):
    details = []
    ok = True
    for r in (1.0, 1.6):
        s = from_support(ScalarField(iso5.mesh, np.full(iso5.mesh.n_vertices, r)),
                         iso5)
        scale = (4 * np.pi * r ** 2) ** 2
        rel = abs(gauge_invariant_I(s)) / scale
        details.append(f"sphere r={r}: {rel:.2e}")
        ok = ok and rel <= 1e-2
    W = from_support(ScalarField(ani5.mesh, ani5.tau.values.copy()), ani5)
    relW = abs(gauge_invariant_I(W)) / energy(W) ** 2
    details.append(f"Wulff: {relW:.2e}")
    ok = ok and relW <= 1e-2
    I1 = gauge_invariant_I(pert5, form="dW")
    I2 = gauge_invariant_I(pert5, form="Lambda")
    rel_forms = abs(I1 - I2) / max(abs(I1), 1e-300)
    details.append(f"forms agree: {rel_forms:.2e}")
    ok = ok and rel_forms <= 1e-2
    _report("AC8 gauge invariant I", ok, "; ".join(details) + " (all <= 1e-2)")


def test_ac09_congruence_identities(ani5, pert5, norm_cache, iso5):
    # Lemma 3.1: r1 exact, r2 = O(h^2)
    rho = ScalarField(ani5.mesh, np.full(ani5.mesh.n_vertices, 0.7))
    r1_5, r2_5 = envelope_residuals(SphereCongruence(pert5, rho))
    ani4 = norm_cache(4, "axisymmetric", a=0.3)
    q4 = ScalarField(ani4.mesh,
                     ani4.tau.values + 0.05 * real_sph_harm(2, 0, ani4.mesh.vertices))
    pert4 = from_support(q4, ani4)
    rho4 = ScalarField(ani4.mesh, np.full(ani4.mesh.n_vertices, 0.7))
    _, r2_4 = envelope_residuals(SphereCongruence(pert4, rho4))
    ratio = r2_4 / r2_5
    # Lemma 3.2: curvature congruences are horizontally degenerate
    sv_rel = 0.0
    for Z in curvature_congruences(pert5):
        sv = horizontal_singular_values(Z)
        sv_rel = max(sv_rel, float((sv.min(axis=1) / np.abs(pert5.M).max()).max()))
    # Lemma 3.3: middle congruence trace residual (ellipsoid example)
    ell = from_support(ellipsoid_support(iso5.mesh, (1, 1, 2)), iso5)
    tr = middle_trace_residual(middle_congruence(ell))
    ok = r1_5 <= 1e-12 and ratio >= 2.5 and sv_rel <= 1e-2 and tr <= 1e-3
    _report("AC9 congruence identities", ok,
            f"r1 = {r1_5:.2e} (exact); r2 s4/s5 = {ratio:.2f} (O(h^2), "
            f"r2 = {r2_5:.2e}); min singular value {sv_rel:.2e} (<= 1e-2); "
            f"middle trace {tr:.2e} (<= 1e-3)")


def test_ac10_canal_oracle(iso5):
    # straight-line tube: a cylinder of radius 0.8
    s = np.linspace(0.0, 2.0, 64)
    alpha = np.stack([s, 0 * s, 0 * s, np.full_like(s, 0.8)], axis=1)
    dalpha = np.stack([np.ones_like(s), 0 * s, 0 * s, 0 * s], axis=1)
    tube = canal_envelope(iso5, SphereCurve.from_samples(s, alpha, dalpha, norm=iso5),
                          n_samples=10, ring_points=64)
    cyl_err = float(np.abs(np.hypot(tube.rings[..., 1], tube.rings[..., 2])
                           - 0.8).max())
    # the sphere-curve (cos s, sin s, 0, 0.2 s)
    curve = curve_from_spec({"kind": "helix", "radius": 1.0, "pitch": 0.0,
                             "t": 0.0, "t_rate": 0.2, "s_range": [0.5, 2.5]},
                            norm=iso5)
    strip = canal_envelope(iso5, curve, n_samples=10, ring_points=48)
    alpha_res = canal_alpha_residual(iso5, strip)
    ok = cyl_err <= 1e-3 and alpha_res <= 1e-6
    _report("AC10 canal oracle", ok,
            f"cylinder radius error {cyl_err:.2e} (<= 1e-3); "
            f"tangency residual {alpha_res:.2e} (<= 1e-6)")


def test_ac11_huygens_cross_validation():
    t0 = time.monotonic()
    mesh = build_icosphere(5)
    ani = norm_from_spec({"kind": "axisymmetric", "a": 0.3}, mesh)
    iso = norm_from_spec({"kind": "isotropic"}, mesh)
    W = from_support(ScalarField(mesh, ani.tau.values.copy()), ani)
    d10, g10 = huygens_check(ani, W, 1.0, n=96)
    qp = ScalarField(mesh, 1 + 0.1 * real_sph_harm(2, 0, mesh.vertices))
    sp = from_support(qp, iso)
    d05, g05 = huygens_check(iso, sp, 0.5, n=96)
    d48, g48 = huygens_check(ani, W, 1.0, n=48)
    elapsed = time.monotonic() - t0
    ratio = d48 / d10
    ok = (d10 <= 2 * g10.spacing and d05 <= 2 * g05.spacing
          and ratio >= 1.6 and elapsed < 180.0)
    _report("AC11 Huygens cross-validation", ok,
            f"t=1.0: {d10:.3f} <= 2h = {2 * g10.spacing:.3f}; "
            f"t=0.5: {d05:.3f} <= 2h = {2 * g05.spacing:.3f}; "
            f"refinement ratio {ratio:.2f} (halving h); "
            f"runtime {elapsed:.0f}s (< 180s)")


def test_ac12_source_discrimination(norm_cache):
    verdicts = {}
    for s in (4, 5):
        norm = norm_cache(s, "axisymmetric", a=0.3)
        mesh = norm.mesh
        q1 = ScalarField(mesh,
                         norm.tau.values + 0.05 * real_sph_harm(2, 0, mesh.vertices))
        q_par = parallel_support(q1, 0.4, norm)
        q_scl = ScalarField(mesh, 1.5 * q1.values)
        v_par = compare_wavefronts(q1, q_par, norm)["distinct_source"]
        v_scl = compare_wavefronts(q1, q_scl, norm)["distinct_source"]
        verdicts[s] = (v_par, v_scl)
    ok = all(v == (False, True) for v in verdicts.values())
    _report("AC12 source discrimination", ok,
            f"parallel/scaled verdicts s=4: {verdicts[4]}, s=5: {verdicts[5]} "
            "(expect (False, True), stable across levels)")
