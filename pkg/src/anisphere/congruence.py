"""Anisotropic spheres as points of R^4: congruences, envelopes, canals.

A sphere with center y and signed radius t is the point Y = (y, t); the point
x lies on it exactly when L(Y - X) = 0 with X = (x, 0) and L the conical
metric.  A congruence over a support surface is Y = X + rho (xi, 1); its difference
from the base is null because gauge(xi) = 1, and tangency reduces to
<dX, xi*> = 0.  Curvature congruences use rho = 1/lambda_i, the middle
congruence their mean.  Canal surfaces envelope one-parameter sphere
families along spacelike curves in R^4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import ScalarField, grad
from .errors import (
    EmptyLevelSetError,
    InfiniteRadiusError,
    NotSpacelikeError,
)
from .norms import Norm, finsler_L, gauge
from .surfaces import SupportSurface

_LIGHTLIKE_MARGIN = 1e-3


@dataclass
class OrientedSphere:
    """Center y and signed radius t: t > 0 outer normal, t < 0 inner,
    t = 0 a point sphere with no orientation."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)

    @property
    def point(self):
        """The R^4 representative (y, t)."""
        return np.append(self.center, self.radius)


def incidence(norm: Norm, sphere: OrientedSphere, x) -> float:
    """L((y - x, t)); zero iff x lies on the anisotropic sphere."""
    v = np.append(sphere.center - np.asarray(x, dtype=float), sphere.radius)
    return finsler_L(norm, v)


@dataclass
class SphereCongruence:
    """Two-parameter family Y = X + rho (xi, 1) over a support surface.

    A `direction` other than the Cahn-Hoffman field builds a general
    (non-enveloped) congruence, used to exercise the converse of the
    envelope lemma.
    """

    surface: SupportSurface
    rho: ScalarField
    direction: np.ndarray = None  # (V, 3), defaults to norm.xi

    def __post_init__(self):
        if self.direction is None:
            self.direction = self.surface.norm.xi

    @property
    def norm(self):
        return self.surface.norm

    @property
    def centers(self):
        return self.surface.X + self.rho.values[:, None] * self.direction

    @property
    def Y(self):
        """(V, 4) sphere points."""
        return np.concatenate([self.centers, self.rho.values[:, None]], axis=1)


def _vertex_gauge_argmax(norm: Norm, pts):
    """Vertex-supremum gauge of many points: values and arg-max vertices.

    The pairing max <x, xi*(mu)> over mesh vertices is exact on congruence
    points rho * xi(nu): the maximizing vertex is nu itself.
    """
    n = len(pts)
    vals = np.empty(n)
    amax = np.empty(n, dtype=np.int64)
    block = 512
    for i in range(0, n, block):
        m = pts[i: i + block] @ norm.xi_star.T
        amax[i: i + block] = np.argmax(m, axis=1)
        vals[i: i + block] = m[np.arange(len(m)), amax[i: i + block]]
    return vals, amax


def envelope_residuals(congruence: SphereCongruence):
    """First-order envelope conditions of Lemma 3.1 as two residuals.

    r1 = sup |L(Y - X)| with the gauge evaluated by its exact vertex
    supremum (algebraically zero for Cahn-Hoffman congruences);
    r2 = sup over frame directions of |dL_{Y-X} o dX|, which reduces to
    |2 rho <dX(e), xi*>| at the gauge arg-max, with dX differentiated
    discretely from the embedding.
    """
    surf = congruence.surface
    norm = congruence.norm
    rho = congruence.rho.values
    w = rho[:, None] * congruence.direction
    nz = np.abs(rho) > 1e-14
    r1 = 0.0
    r2 = 0.0
    if nz.any():
        g, amax = _vertex_gauge_argmax(norm, w[nz])
        r1 = float(np.abs(g ** 2 - rho[nz] ** 2).max())
        dX = surf.dX_discrete()[nz]                    # (n, 2, 3)
        xs = norm.xi_star[amax]                        # (n, 3)
        pair = np.einsum("nkc,nc->nk", dX, xs)
        r2 = float(np.abs(2.0 * g[:, None] * pair).max())
    return r1, r2


def _lambda_fields(surface: SupportSurface):
    lam1 = surface.lambda1.values
    lam2 = surface.lambda2.values
    if np.any(np.abs(lam1) < 1e-12) or np.any(np.abs(lam2) < 1e-12):
        raise InfiniteRadiusError("a principal curvature vanishes on the surface")
    return lam1, lam2


def curvature_congruences(surface: SupportSurface):
    """The two congruences Z_i = X + (1/lambda_i)(xi, 1)."""
    lam1, lam2 = _lambda_fields(surface)
    mesh = surface.mesh
    return (
        SphereCongruence(surface, ScalarField(mesh, 1.0 / lam1)),
        SphereCongruence(surface, ScalarField(mesh, 1.0 / lam2)),
    )


def horizontal_singular_values(congruence: SphereCongruence):
    """Per-vertex singular values of the 2x2 horizontal differential.

    (dZ)^T = (D^2 q + q I) + rho (D^2 tau + tau I) in the vertex frame;
    for the curvature congruences its smallest singular value vanishes
    (Lemma 3.2's degenerate direction).
    """
    surf = congruence.surface
    H = surf.M + congruence.rho.values[:, None, None] * surf.norm.B
    return np.linalg.svd(H, compute_uv=False)


def middle_congruence(surface: SupportSurface, check_tol=1e-6):
    """The middle sphere congruence Z with rho = (1/lambda_1 + 1/lambda_2)/2.

    Verifies the characterizing identity trace((d xi)^{-1} (dZ)^T) = 0
    algebraically per vertex to `check_tol` times the curvature scale.
    """
    lam1, lam2 = _lambda_fields(surface)
    rho = 0.5 * (1.0 / lam1 + 1.0 / lam2)
    cong = SphereCongruence(surface, ScalarField(surface.mesh, rho))
    eta = surface.eta.values
    alg = np.abs(eta + 2.0 * rho)
    scale = np.maximum(np.abs(eta), 1.0)
    worst = float((alg / scale).max())
    if worst > check_tol:
        raise InfiniteRadiusError(
            f"middle congruence trace identity violated ({worst:.3g})"
        )
    return cong


def _frame_operator(mesh, field_3d):
    """Frame matrix O[i, k] = <d field(e_k), e_i> by stencil differentiation."""
    d = np.empty((mesh.n_vertices, 2, 3))
    for c in range(3):
        g = grad(ScalarField(mesh, field_3d[:, c])).components
        d[:, 0, c] = g[:, 0]
        d[:, 1, c] = g[:, 1]
    e1 = mesh.frames[:, 0]
    e2 = mesh.frames[:, 1]
    O = np.empty((mesh.n_vertices, 2, 2))
    O[:, 0, 0] = np.einsum("vc,vc->v", d[:, 0], e1)
    O[:, 1, 0] = np.einsum("vc,vc->v", d[:, 0], e2)
    O[:, 0, 1] = np.einsum("vc,vc->v", d[:, 1], e1)
    O[:, 1, 1] = np.einsum("vc,vc->v", d[:, 1], e2)
    return O


def middle_trace_residual(congruence: SphereCongruence) -> float:
    """Discrete check of trace((d xi)^{-1} (dZ)^T) = 0 for the middle sphere.

    Uses the proof identity (dZ)^T(e) = dX(e) + rho d xi(e) with
    dX = D^2 q + q I from the curvature data and the Cahn-Hoffman
    differential re-derived by stencil differentiation of the xi embedding,
    so the radius field is checked against an independent discretization.
    """
    surf = congruence.surface
    norm = congruence.norm
    O = surf.M + congruence.rho.values[:, None, None] * _frame_operator(
        surf.mesh, norm.xi
    )
    tr = np.einsum("vij,vji->v", np.linalg.inv(norm.B), O)
    return float(np.abs(tr).max())


# -- sphere curves and canal surfaces --------------------------------------------

@dataclass
class SphereCurve:
    """Sampled curve of anisotropic spheres in R^4 with derivative samples."""

    s: np.ndarray          # (n,) parameter values, increasing
    alpha: np.ndarray      # (n, 4)
    dalpha: np.ndarray     # (n, 4)
    norm: Norm = field(repr=False, default=None)

    @classmethod
    def from_samples(cls, s, alpha, dalpha=None, norm=None):
        s = np.asarray(s, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        if dalpha is None:
            dalpha = np.gradient(alpha, s, axis=0)
        else:
            dalpha = np.asarray(dalpha, dtype=float)
        curve = cls(s=s, alpha=alpha, dalpha=dalpha, norm=norm)
        if norm is not None:
            curve.validate_spacelike(norm)
        return curve

    def validate_spacelike(self, norm: Norm):
        """Require T(a') - |a4'| above the light-cone margin everywhere."""
        for k in range(len(self.s)):
            T = gauge(norm, self.dalpha[k, :3])
            slack = T - abs(self.dalpha[k, 3])
            if slack <= _LIGHTLIKE_MARGIN * max(T, 1.0):
                raise NotSpacelikeError(
                    f"curve is not safely spacelike at s={self.s[k]:.6g} "
                    f"(T(a')={T:.6g}, |a4'|={abs(self.dalpha[k, 3]):.6g})"
                )

    def at(self, sq):
        a = np.array([np.interp(sq, self.s, self.alpha[:, i]) for i in range(4)])
        da = np.array([np.interp(sq, self.s, self.dalpha[:, i]) for i in range(4)])
        return a, da


def curve_from_spec(spec, norm: Norm = None, n=512) -> SphereCurve:
    """Build a SphereCurve from a JSON-style spec.

    kinds: `helix` (radius, pitch, t, optional t_rate, s_range) with
    alpha = (R cos s, R sin s, pitch*s, t + t_rate*s); `samples` with an
    explicit [[x, y, z, t], ...] list (finite-difference derivatives).
    """
    kind = spec.get("kind")
    if kind == "helix":
        R = float(spec.get("radius", 1.0))
        pitch = float(spec.get("pitch", 0.0))
        t0 = float(spec.get("t", 1.0))
        rate = float(spec.get("t_rate", 0.0))
        s0, s1 = spec.get("s_range", (0.0, 2.0 * np.pi))
        s = np.linspace(s0, s1, n)
        alpha = np.stack(
            [R * np.cos(s), R * np.sin(s), pitch * s, t0 + rate * s], axis=1
        )
        dalpha = np.stack(
            [-R * np.sin(s), R * np.cos(s), np.full_like(s, pitch),
             np.full_like(s, rate)], axis=1
        )
        return SphereCurve.from_samples(s, alpha, dalpha, norm=norm)
    if kind == "samples":
        pts = np.asarray(spec["points"], dtype=float)
        s = np.arange(len(pts), dtype=float)
        return SphereCurve.from_samples(s, pts, norm=norm)
    raise ValueError(f"unknown curve kind: {kind!r}")


def _marching_level_curve(mesh, values):
    """Closed polylines of the zero level set by marching triangles.

    Returns a list of loops; each loop is a list of (edge, u) pairs where
    `edge` is a sorted vertex pair and `u` the linear crossing parameter.
    """
    vals = values.copy()
    vals[vals == 0.0] = 1e-300
    faces = mesh.faces
    fv = vals[faces]
    sign = fv > 0
    crossing = sign.any(axis=1) & (~sign).any(axis=1)
    seg_by_edge = {}
    face_edges = []
    for f in np.where(crossing)[0]:
        tri = faces[f]
        pts = []
        for k in range(3):
            i, j = tri[k], tri[(k + 1) % 3]
            if (vals[i] > 0) != (vals[j] > 0):
                e = (int(min(i, j)), int(max(i, j)))
                pts.append(e)
        if len(pts) == 2:
            face_edges.append(tuple(pts))
            for e in pts:
                seg_by_edge.setdefault(e, []).append(len(face_edges) - 1)
    if not face_edges:
        raise EmptyLevelSetError("no zero crossing of the level function")
    # walk segments into loops
    visited = [False] * len(face_edges)
    loops = []
    for start in range(len(face_edges)):
        if visited[start]:
            continue
        loop = []
        f = start
        e_in = face_edges[f][0]
        while True:
            visited[f] = True
            e_out = face_edges[f][1] if face_edges[f][0] == e_in else face_edges[f][0]
            loop.append(e_in)
            nxt = [g for g in seg_by_edge[e_out] if not visited[g]]
            if not nxt:
                loop.append(e_out)
                closed = start in seg_by_edge.get(e_out, [])
                break
            f = nxt[0]
            e_in = e_out
        loops.append((loop, closed))
    return loops


def _refine_on_edge(mesh, tau_vals, a3, a4dot, edge, iters=60):
    """Bisection for <nu(u), a3>/tau_lin(u) = a4dot along a mesh edge."""
    i, j = edge
    vi, vj = mesh.vertices[i], mesh.vertices[j]
    ti, tj = tau_vals[i], tau_vals[j]

    def g(u):
        p = (1 - u) * vi + u * vj
        p = p / np.linalg.norm(p)
        return (p @ a3) / ((1 - u) * ti + u * tj) - a4dot

    lo, hi = 0.0, 1.0
    glo = g(lo)
    if glo == 0.0:
        return vi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    p = (1 - u) * vi + u * vj
    return p / np.linalg.norm(p)


def _resample_loop(points, count):
    """Uniform arclength resampling of a closed polyline."""
    pts = np.asarray(points)
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    t = np.concatenate([[0.0], np.cumsum(seg)])
    total = t[-1]
    tq = np.linspace(0.0, total, count, endpoint=False)
    out = np.empty((count, 3))
    for c in range(3):
        out[:, c] = np.interp(tq, t, closed[:, c])
    return out


@dataclass
class CanalStrip:
    """Envelope strip of a sphere curve: rings of points along the curve.

    `rings` are arclength-resampled for meshing; `contact_nu` keeps the raw
    refined extraction directions per ring, where the tangency equation
    holds to root-finding precision.
    """

    rings: np.ndarray        # (n_s, m, 3) envelope points
    sphere_dirs: np.ndarray  # (n_s, m, 3) unit directions nu of the contact
    s_values: np.ndarray
    curve: SphereCurve
    contact_nu: list = None  # per ring, (n_k, 3) refined level-curve points

    def quad_mesh(self):
        """Vertices and quad faces of the open strip."""
        n_s, m, _ = self.rings.shape
        verts = self.rings.reshape(-1, 3)
        quads = []
        for i in range(n_s - 1):
            for j in range(m):
                a = i * m + j
                b = i * m + (j + 1) % m
                quads.append([a, b, b + m, a + m])
        return verts, np.array(quads, dtype=np.int64)

    def save_obj(self, path):
        verts, quads = self.quad_mesh()
        with open(path, "w") as fh:
            for v in verts:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for q in quads:
                fh.write("f " + " ".join(str(i + 1) for i in q) + "\n")


def canal_envelope(norm: Norm, curve: SphereCurve, n_samples=40,
                   ring_points=100) -> CanalStrip:
    """Envelope of the sphere family along a spacelike curve.

    For each parameter value the closed level curve of
    g(nu) = <nu, a'(s)> / tau(nu) - a4'(s) is extracted on the sphere mesh
    by marching triangles, each crossing refined by bisection, and the
    envelope points X = a(s) - a4(s) xi(nu) are assembled into rings of a
    quad strip.
    """
    curve.validate_spacelike(norm)
    mesh = norm.mesh
    tau_vals = norm.tau.values
    s_values = np.linspace(curve.s[0], curve.s[-1], n_samples)
    rings = np.empty((n_samples, ring_points, 3))
    dirs = np.empty((n_samples, ring_points, 3))
    contact = []
    for k, sq in enumerate(s_values):
        a, da = curve.at(sq)
        g = (mesh.vertices @ da[:3]) / tau_vals - da[3]
        loops = _marching_level_curve(mesh, g)
        loops.sort(key=lambda item: -len(item[0]))
        edges = loops[0][0]
        pts = np.array(
            [_refine_on_edge(mesh, tau_vals, da[:3], da[3], e) for e in edges]
        )
        contact.append(pts)
        ring_nu = _resample_loop(pts, ring_points)
        ring_nu /= np.linalg.norm(ring_nu, axis=1, keepdims=True)
        if k > 0:
            # align ring phase with the previous ring to avoid strip twist
            shift = int(np.argmin(
                [np.linalg.norm(np.roll(ring_nu, -r, axis=0) - dirs[k - 1])
                 for r in range(ring_points)]
            ))
            ring_nu = np.roll(ring_nu, -shift, axis=0)
        xi_pts = norm.xi_analytic(ring_nu)
        rings[k] = a[:3][None, :] - a[3] * xi_pts
        dirs[k] = ring_nu
    return CanalStrip(rings=rings, sphere_dirs=dirs, s_values=s_values,
                      curve=curve, contact_nu=contact)


def canal_alpha_residual(norm: Norm, strip: CanalStrip) -> float:
    """sup |<xi*(nu), a'(s)> - a4'(s)| over the refined extraction points."""
    worst = 0.0
    for k, sq in enumerate(strip.s_values):
        _, da = strip.curve.at(sq)
        nu = strip.contact_nu[k] if strip.contact_nu else strip.sphere_dirs[k]
        tau = norm.mesh.interpolate(norm.tau.values, nu)
        res = (nu @ da[:3]) / tau - da[3]
        worst = max(worst, float(np.abs(res).max()))
    return worst


def canal_incidence_residual(norm: Norm, strip: CanalStrip) -> float:
    """sup |L(Y(s) - X)| over strip points: envelope points lie on spheres."""
    worst = 0.0
    for k, sq in enumerate(strip.s_values):
        a, _ = strip.curve.at(sq)
        for p in strip.rings[k][:: max(1, len(strip.rings[k]) // 12)]:
            worst = max(worst, abs(finsler_L(norm, np.append(a[:3] - p, a[3]))))
    return worst
