"""Smooth anisotropic speed profiles, Wulff shapes and the conical metric.

A norm here is a positive scalar profile tau on the sphere whose
1-homogeneous extension T(x) = |x| tau(x/|x|) is convex, equivalently
D^2 tau + tau I is positive definite.  Two convex bodies are attached to it:

* the Wulff shape W, the body with support function tau, parameterized by
  the Cahn-Hoffman map xi(nu) = D tau + tau nu (unit-time wavefront of a
  point source);
* its dual body W* = {T <= 1}, parameterized by xi*(nu) = nu / tau(nu).

`eval_T` evaluates the extension of tau (the support function of W, which
is also the Hamiltonian of front propagation), while `gauge` evaluates the
Minkowski functional of W itself (the anisotropic radius), via the pairing
gauge(x) = max <x, xi*>.  The conical metric L((x, t)) = gauge(x)^2 - t^2
vanishes exactly on rays with direction (xi, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    ScalarField,
    TangentTensorField,
    TangentVectorField,
    grad,
    hess,
    real_sph_harm,
)
from .errors import ConvexityError, PositivityError
from .mesh import SphereMesh, write_obj

_EIG_MARGIN = 1e-8


def _tau_evaluator(spec):
    """Vectorized analytic tau(directions) for a norm spec."""
    kind = spec.get("kind")
    if kind == "isotropic":
        return lambda n: np.ones(len(np.atleast_2d(n)))
    if kind == "axisymmetric":
        a = float(spec["a"])
        return lambda n: 1.0 - a * np.atleast_2d(n)[:, 2] ** 2
    if kind == "harmonics":
        coeffs = [(int(l), int(m), float(c)) for l, m, c in spec["coeffs"]]

        def _eval(n):
            n = np.atleast_2d(n)
            out = np.ones(len(n))
            for l, m, c in coeffs:
                out += c * real_sph_harm(l, m, n)
            return out

        return _eval
    raise ValueError(f"unknown norm kind: {kind!r}")


@dataclass
class Norm:
    """Speed profile tau on a sphere mesh with derived Wulff data."""

    mesh: SphereMesh
    spec: dict
    tau: ScalarField
    dtau: TangentVectorField
    d2tau: TangentTensorField
    kW: ScalarField
    xi: np.ndarray        # (V, 3) Cahn-Hoffman points, boundary of W
    xi_star: np.ndarray   # (V, 3) dual points nu / tau
    B: np.ndarray = field(repr=False, default=None)      # (V, 2, 2) D^2 tau + tau I
    B_inv: np.ndarray = field(repr=False, default=None)
    _tau_fn: object = field(repr=False, default=None)

    @property
    def is_isotropic(self):
        return self.spec.get("kind") == "isotropic"

    @property
    def det_B(self):
        return 1.0 / self.kW.values

    # -- analytic direction evaluation (no mesh interpolation) ----------------

    def tau_analytic(self, directions):
        return self._tau_fn(np.atleast_2d(directions))

    def support_analytic(self, x):
        """T(x) = |x| tau(x/|x|) from the analytic profile; 0 at the origin."""
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        ok = r > 0
        if ok.any():
            out[ok] = r[ok] * self._tau_fn(x[ok] / r[ok, None])
        return out

    def xi_analytic(self, directions, step=1e-6):
        """Cahn-Hoffman points grad T at unit directions, by central differences."""
        n = np.atleast_2d(directions)
        out = np.empty_like(n, dtype=float)
        for i in range(3):
            dp = np.zeros(3)
            dp[i] = step
            out[:, i] = (self.support_analytic(n + dp) - self.support_analytic(n - dp)) / (
                2 * step
            )
        return out


def norm_from_spec(spec, mesh: SphereMesh) -> Norm:
    """Build a validated Norm from a declarative spec on the given mesh.

    Raises PositivityError if tau <= 0 anywhere and ConvexityError if
    D^2 tau + tau I has an eigenvalue below the positivity margin.
    """
    tau_fn = _tau_evaluator(spec)
    tau_vals = tau_fn(mesh.vertices)
    if np.any(tau_vals <= 0):
        worst = int(np.argmin(tau_vals))
        raise PositivityError(
            f"tau is non-positive (min {tau_vals.min():.6g} at vertex {worst})"
        )
    tau = ScalarField(mesh, tau_vals)
    dtau = grad(tau)
    d2tau = hess(tau)

    B = d2tau.as_matrices()
    B[:, 0, 0] += tau_vals
    B[:, 1, 1] += tau_vals
    tr = B[:, 0, 0] + B[:, 1, 1]
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    disc = np.sqrt(np.maximum(tr ** 2 - 4 * det, 0.0))
    eig_min = 0.5 * (tr - disc)
    if np.any(eig_min < _EIG_MARGIN):
        worst = int(np.argmin(eig_min))
        raise ConvexityError(
            f"D^2 tau + tau I has eigenvalue {eig_min.min():.6g} < {_EIG_MARGIN} "
            f"at vertex {worst}: Wulff shape not convex"
        )
    B_inv = np.linalg.inv(B)
    kW = ScalarField(mesh, 1.0 / det)
    xi = dtau.as_vectors() + tau_vals[:, None] * mesh.vertices
    xi_star = mesh.vertices / tau_vals[:, None]
    return Norm(
        mesh=mesh,
        spec=dict(spec),
        tau=tau,
        dtau=dtau,
        d2tau=d2tau,
        kW=kW,
        xi=xi,
        xi_star=xi_star,
        B=B,
        B_inv=B_inv,
        _tau_fn=tau_fn,
    )


# -- norm evaluation -------------------------------------------------------------

def eval_T(norm: Norm, x) -> float | np.ndarray:
    """|x| tau(x/|x|) via barycentric interpolation of tau on the mesh.

    Positively 1-homogeneous; returns 0 for x = 0.  This is the support
    function of the Wulff shape.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    r = np.linalg.norm(x, axis=1)
    out = np.zeros(len(x))
    ok = r > 0
    if ok.any():
        dirs = x[ok] / r[ok, None]
        out[ok] = r[ok] * norm.mesh.interpolate(norm.tau.values, dirs)
    return float(out[0]) if single else out


def _refine_max_fit(norm: Norm, field_vals, v):
    """Quadratic refinement of a vertex maximum using the local cubic fit."""
    mesh = norm.mesh
    ix = mesh.stencil_idx[v]
    P = mesh.stencil_pinv[v]
    c = P @ field_vals[ix]
    g = c[1:3]
    H = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    tr, det = H[0, 0] + H[1, 1], H[0, 0] * H[1, 1] - H[0, 1] ** 2
    if not (det > 0 and tr < 0):  # not negative definite: keep vertex value
        return field_vals[v]
    d = np.linalg.solve(H, -g)
    if np.linalg.norm(d) > 1.5:
        return field_vals[v]
    x, y = d
    basis = np.array(
        [1, x, y, x * x, x * y, y * y, x ** 3, x * x * y, x * y * y, y ** 3]
    )
    return max(field_vals[v], float(c @ basis))


def _refine_max_newton(norm: Norm, x, v, fd=1e-5, iters=8):
    """Maximize <x, mu>/tau(mu) over the sphere starting at vertex v."""
    mu = norm.mesh.vertices[v].copy()

    def f(m):
        return float(m @ x) / float(norm.tau_analytic(m[None])[0])

    val = f(mu)
    for _ in range(iters):
        a = np.array([0.0, 0.0, 1.0]) if abs(mu[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = a - (a @ mu) * mu
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(mu, e1)

        def fl(s, t):
            m = mu + s * e1 + t * e2
            return f(m / np.linalg.norm(m))

        f0 = fl(0, 0)
        gx = (fl(fd, 0) - fl(-fd, 0)) / (2 * fd)
        gy = (fl(0, fd) - fl(0, -fd)) / (2 * fd)
        hxx = (fl(fd, 0) - 2 * f0 + fl(-fd, 0)) / fd ** 2
        hyy = (fl(0, fd) - 2 * f0 + fl(0, -fd)) / fd ** 2
        hxy = (fl(fd, fd) - fl(fd, -fd) - fl(-fd, fd) + fl(-fd, -fd)) / (4 * fd ** 2)
        H = np.array([[hxx, hxy], [hxy, hyy]])
        g = np.array([gx, gy])
        det = H[0, 0] * H[1, 1] - H[0, 1] ** 2
        if det <= 0:
            break
        d = np.linalg.solve(H, -g)
        nd = np.linalg.norm(d)
        if nd > 0.2:
            d *= 0.2 / nd
        mu_new = mu + d[0] * e1 + d[1] * e2
        mu_new /= np.linalg.norm(mu_new)
        val_new = f(mu_new)
        if val_new < val - 1e-14:
            break
        mu, val = mu_new, val_new
        if nd < 1e-9:
            break
    return val


def eval_T_dual(norm: Norm, u, refine=True) -> float:
    """Dual evaluation T*(u) = max over Wulff points of <u, xi(nu)>.

    The vertex maximum is refined by a local quadratic maximization of the
    pairing over the containing neighborhood's fit.
    """
    u = np.asarray(u, dtype=float)
    m = norm.xi @ u
    v = int(np.argmax(m))
    if not refine:
        return float(m[v])
    return _refine_max_fit(norm, m, v)


def gauge(norm: Norm, x, refine=True) -> float:
    """Minkowski functional of the Wulff shape: max over W* of <x, xi*(nu)>.

    gauge(xi(nu)) = 1: this is the anisotropic radius, the norm for which
    W is the unit sphere.  With `refine`, the vertex maximum is polished by
    Newton iteration on the analytic profile.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0.0:
        return 0.0
    m = norm.xi_star @ x
    v = int(np.argmax(m))
    if not refine:
        return float(m[v])
    return _refine_max_newton(norm, x, v)


def gauge_gradient_vertex(norm: Norm, x):
    """Arg-max vertex of the gauge pairing; xi*(that vertex) is grad gauge(x)."""
    m = norm.xi_star @ np.asarray(x, dtype=float)
    return int(np.argmax(m))


def finsler_L(norm: Norm, v, refine=True) -> float:
    """Conical metric L((x, t)) = gauge(x)^2 - t^2 for v = (x, t) in R^4.

    Null vectors are multiples of (xi(nu), 1); the null cone encodes
    point-on-sphere incidence.
    """
    v = np.asarray(v, dtype=float)
    return gauge(norm, v[:3], refine=refine) ** 2 - v[3] ** 2


# -- Wulff shape ------------------------------------------------------------------

@dataclass
class WulffShape:
    """Per-vertex boundary points of W and their dual points on W*."""

    mesh: SphereMesh
    norm: Norm
    xi: np.ndarray
    xi_star: np.ndarray

    def save_obj(self, path):
        write_obj(path, self.xi, self.mesh.faces)


def cahn_hoffman_map(norm: Norm) -> WulffShape:
    """The parameterization xi = D tau + tau nu of W, with xi* = nu / tau."""
    return WulffShape(mesh=norm.mesh, norm=norm, xi=norm.xi, xi_star=norm.xi_star)


def mesh_volume(points, faces) -> float:
    """Enclosed volume of a closed oriented triangle mesh (divergence theorem)."""
    p0, p1, p2 = points[faces[:, 0]], points[faces[:, 1]], points[faces[:, 2]]
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def wulff_volume(norm: Norm) -> float:
    """Enclosed volume of the Wulff embedding via (1/3) int <xi, n> dA."""
    return mesh_volume(norm.xi, norm.mesh.faces)
