"""Surfaces as wavefronts: support-function representation, Cahn-Hoffman
fields, anisotropic curvatures, parallel surfaces and parametric patches.

A convex surface with support function q is reconstructed as X = Dq + q nu;
its differential in the vertex frame is M = D^2 q + q I and the anisotropic
shape data comes from A = M B^{-1} with B = D^2 tau + tau I.  Eigenvalues of
A are -1/lambda_i (anisotropic curvature radii up to sign), eta = trace A.
Parallel propagation by time t replaces q by q + t tau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import ScalarField, grad, hess, real_sph_harm
from .errors import (
    DegenerateError,
    InfiniteRadiusError,
    NonConvexInputError,
    SingularCurvatureError,
)
from .mesh import SphereMesh, write_obj
from .norms import Norm, mesh_volume

_SINGULAR_TOL = 1e-10


@dataclass
class SupportSurface:
    """Convex surface given by its support function on the sphere mesh."""

    norm: Norm
    q: ScalarField
    X: np.ndarray                 # (V, 3) immersion points
    M: np.ndarray = field(repr=False, default=None)   # (V, 2, 2) D^2 q + q I
    A: np.ndarray = field(repr=False, default=None)   # (V, 2, 2) M B^{-1}
    lambda1: ScalarField = None
    lambda2: ScalarField = None
    eta: ScalarField = None

    @property
    def mesh(self):
        return self.norm.mesh

    @property
    def det_M(self):
        """Area density d Sigma / d sigma = det(D^2 q + q I)."""
        return self.M[:, 0, 0] * self.M[:, 1, 1] - self.M[:, 0, 1] * self.M[:, 1, 0]

    @property
    def det_A(self):
        """1 / (lambda_1 lambda_2), the ratio K_W / K_Sigma."""
        return self.A[:, 0, 0] * self.A[:, 1, 1] - self.A[:, 0, 1] * self.A[:, 1, 0]

    def dX_discrete(self):
        """(V, 2, 3) frame derivatives of the embedding, by stencil differentiation."""
        mesh = self.mesh
        out = np.empty((mesh.n_vertices, 2, 3))
        for c in range(3):
            g = grad(ScalarField(mesh, self.X[:, c])).components
            out[:, 0, c] = g[:, 0]
            out[:, 1, c] = g[:, 1]
        return out

    def enclosed_volume(self, t=0.0) -> float:
        """Volume of the parallel surface X + t xi by the divergence theorem."""
        pts = self.X + t * self.norm.xi
        return mesh_volume(pts, self.mesh.faces)

    def save_obj(self, path):
        write_obj(path, self.X, self.mesh.faces)


def _eig2_real(A, clip_tol=1e-9):
    """Eigenvalues of (V, 2, 2) matrices with real spectrum (sorted ascending)."""
    tr = A[:, 0, 0] + A[:, 1, 1]
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    disc = tr * tr - 4 * det
    scale = np.maximum(tr * tr, 1.0)
    if np.any(disc < -clip_tol * scale):
        raise DegenerateError("complex eigenvalue pair in curvature operator")
    s = np.sqrt(np.maximum(disc, 0.0))
    return 0.5 * (tr - s), 0.5 * (tr + s)


def from_support(q: ScalarField, norm: Norm) -> SupportSurface:
    """Build the surface X = Dq + q nu with curvature data from q.

    Raises SingularCurvatureError naming offending vertices when
    D^2 q + q I is singular somewhere (vanishing curvature).
    """
    mesh = norm.mesh
    if q.mesh is not mesh:
        raise SingularCurvatureError("support function lives on a different mesh")
    M = hess(q).as_matrices()
    M[:, 0, 0] += q.values
    M[:, 1, 1] += q.values
    detM = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    scale = np.maximum(np.abs(q.values) ** 2, 1.0)
    bad = np.where(np.abs(detM) < _SINGULAR_TOL * scale)[0]
    if len(bad):
        raise SingularCurvatureError(
            f"D^2 q + q I singular at {len(bad)} vertices (first: {bad[:8].tolist()})",
            vertices=bad,
        )
    A = M @ norm.B_inv
    a1, a2 = _eig2_real(A)
    X = grad(q).as_vectors() + q.values[:, None] * mesh.vertices
    return SupportSurface(
        norm=norm,
        q=q,
        X=X,
        M=M,
        A=A,
        lambda1=ScalarField(mesh, -1.0 / a1),
        lambda2=ScalarField(mesh, -1.0 / a2),
        eta=ScalarField(mesh, A[:, 0, 0] + A[:, 1, 1]),
    )


def parallel_support(q: ScalarField, t: float, norm: Norm) -> ScalarField:
    """Support function q + t tau of the parallel surface X + t xi."""
    return ScalarField(q.mesh, q.values + t * norm.tau.values)


def legendre_residual(obj, norm: Norm = None) -> float:
    """sup |<dX(e), xi*>| over samples and directions: the contact condition.

    Accepts a SupportSurface (discrete frame derivatives of the embedding)
    or a ParametricPatch (grid derivatives, dual points at patch normals).
    """
    if isinstance(obj, SupportSurface):
        norm = obj.norm
        dX = obj.dX_discrete()                           # (V, 2, 3)
        xs = norm.xi_star                                # (V, 3)
        res = np.einsum("vkc,vc->vk", dX, xs)
        return float(np.abs(res).max())
    patch = obj
    if norm is None:
        raise ValueError("a norm is required for patch residuals")
    nu = patch.normals
    tau = norm.tau_analytic(nu.reshape(-1, 3)).reshape(nu.shape[:2])
    r1 = np.einsum("uvc,uvc->uv", patch.Xu, nu) / tau
    r2 = np.einsum("uvc,uvc->uv", patch.Xv, nu) / tau
    return float(max(np.abs(r1).max(), np.abs(r2).max()))


# -- parametric patches ------------------------------------------------------

@dataclass
class ParametricPatch:
    """Immersion samples on a rectangular parameter grid with derivatives."""

    X: np.ndarray        # (nu, nv, 3)
    Xu: np.ndarray       # (nu, nv, 3)
    Xv: np.ndarray       # (nu, nv, 3)
    normals: np.ndarray  # (nu, nv, 3) unit
    du: float
    dv: float

    @classmethod
    def from_samples(cls, X, du, dv):
        """Patch with central finite-difference first derivatives."""
        Xu = np.gradient(X, du, axis=0)
        Xv = np.gradient(X, dv, axis=1)
        n = np.cross(Xu, Xv)
        n /= np.linalg.norm(n, axis=2, keepdims=True)
        return cls(X=X, Xu=Xu, Xv=Xv, normals=n, du=du, dv=dv)


def helicoid_patch(pitch, r_range=(0.5, 1.5), theta_range=(0.0, 2.0 * np.pi),
                   n_r=40, n_theta=160) -> ParametricPatch:
    """Helicoid (r cos theta, r sin theta, pitch * theta) with analytic frame."""
    r = np.linspace(*r_range, n_r)
    th = np.linspace(*theta_range, n_theta)
    R, TH = np.meshgrid(r, th, indexing="ij")
    X = np.stack([R * np.cos(TH), R * np.sin(TH), pitch * TH], axis=2)
    Xu = np.stack([np.cos(TH), np.sin(TH), np.zeros_like(R)], axis=2)
    Xv = np.stack([-R * np.sin(TH), R * np.cos(TH), pitch * np.ones_like(R)], axis=2)
    n = np.cross(Xu, Xv)
    n /= np.linalg.norm(n, axis=2, keepdims=True)
    return ParametricPatch(X=X, Xu=Xu, Xv=Xv, normals=n,
                           du=r[1] - r[0], dv=th[1] - th[0])


def patch_anisotropic_curvatures(patch: ParametricPatch, norm: Norm,
                                 eta_tol=1e-8):
    """Anisotropic curvature data of a patch from dxi = -lambda dX.

    Returns (lambda1, lambda2, Lambda, eta) as 2D arrays on the interior
    grid (two samples trimmed at each border for the finite differences of
    the Cahn-Hoffman field).  Raises DegenerateError where dX is singular
    and InfiniteRadiusError if some lambda_i vanishes (eta undefined).
    """
    nu = patch.normals
    shp = nu.shape[:2]
    xi = norm.xi_analytic(nu.reshape(-1, 3)).reshape(*shp, 3)
    xi_u = np.gradient(xi, patch.du, axis=0)
    xi_v = np.gradient(xi, patch.dv, axis=1)

    # trim two rings: border normals may be one-sided, and the Cahn-Hoffman
    # differences one sample in still touch them
    sl = (slice(2, -2), slice(2, -2))
    dX = np.stack([patch.Xu[sl], patch.Xv[sl]], axis=3)      # (..., 3, 2)
    dxi = np.stack([xi_u[sl], xi_v[sl]], axis=3)

    gram = np.einsum("uvci,uvcj->uvij", dX, dX)
    if np.any(np.linalg.det(gram) < 1e-14):
        raise DegenerateError("patch differential dX is singular on the grid")
    rhs = np.einsum("uvci,uvcj->uvij", dX, dxi)
    C = np.linalg.solve(gram, rhs)
    S = -C                                                    # dxi = -S dX
    tr = S[..., 0, 0] + S[..., 1, 1]
    det = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    disc = np.maximum(tr * tr - 4 * det, 0.0)
    s = np.sqrt(disc)
    lam1, lam2 = 0.5 * (tr - s), 0.5 * (tr + s)
    if np.any(np.abs(lam1) < eta_tol) or np.any(np.abs(lam2) < eta_tol):
        raise InfiniteRadiusError("some anisotropic curvature vanishes on the patch")
    Lambda = tr
    eta = -(1.0 / lam1 + 1.0 / lam2)
    return lam1, lam2, Lambda, eta


# -- support-function fitting -------------------------------------------------

def check_convex_mesh(vertices, faces, tol=0.02):
    """Verify consistent convex dihedrals of a closed oriented mesh.

    `tol` is relative to the mean edge length: a reflex dihedral counts as
    non-convex only when the opposite vertex rises above the neighbor face
    plane by more than tol * edge scale, so discretization ripple of a
    smooth convex body is accepted while genuine dimples are rejected.
    """
    center = vertices.mean(axis=0)
    p0, p1, p2 = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    nn = np.linalg.norm(n, axis=1, keepdims=True)
    n = n / np.maximum(nn, 1e-300)
    cent = (p0 + p1 + p2) / 3.0
    outward = np.einsum("ij,ij->i", n, cent - center)
    if np.all(outward < 0):
        n = -n
    elif not np.all(outward > 0):
        raise NonConvexInputError("mesh orientation is inconsistent")
    # every vertex must lie on the inner side of every adjacent face plane
    edge_faces = {}
    for fi, f in enumerate(faces):
        for k in range(3):
            e = tuple(sorted((f[k], f[(k + 1) % 3])))
            edge_faces.setdefault(e, []).append(fi)
    edge_len = np.linalg.norm(vertices[faces[:, 0]] - vertices[faces[:, 1]], axis=1)
    scale = float(np.mean(edge_len))
    for e, fl in edge_faces.items():
        if len(fl) != 2:
            raise NonConvexInputError("mesh is not closed (boundary edge found)")
        f1, f2 = fl
        opp = [v for v in faces[f2] if v not in e]
        h = float((vertices[opp[0]] - vertices[faces[f1][0]]) @ n[f1])
        if h > tol * scale:
            raise NonConvexInputError(
                f"non-convex dihedral at edge {e} (height {h:.3g})"
            )


def fit_support(vertices, faces, mesh: SphereMesh, l_fit=12) -> ScalarField:
    """Support function of a closed convex input mesh, sampled on `mesh`.

    q(nu) = max over input vertices of <p, nu>, then smoothed by one
    weighted least-squares projection onto spherical harmonics l <= l_fit.
    """
    vertices = np.asarray(vertices, dtype=float)
    check_convex_mesh(vertices, np.asarray(faces, dtype=np.int64))
    nv = mesh.n_vertices
    q_raw = np.empty(nv)
    block = 2048
    for i in range(0, nv, block):
        q_raw[i: i + block] = (mesh.vertices[i: i + block] @ vertices.T).max(axis=1)
    cols = []
    for l in range(l_fit + 1):
        for m in range(-l, l + 1):
            cols.append(real_sph_harm(l, m, mesh.vertices))
    Y = np.stack(cols, axis=1)
    w = mesh.weights
    coeff, *_ = np.linalg.lstsq(Y * np.sqrt(w)[:, None], q_raw * np.sqrt(w), rcond=None)
    return ScalarField(mesh, Y @ coeff)


# -- declarative surface specs -------------------------------------------------

def ellipsoid_support(mesh: SphereMesh, axes) -> ScalarField:
    a, b, c = axes
    n = mesh.vertices
    return ScalarField(
        mesh, np.sqrt((a * n[:, 0]) ** 2 + (b * n[:, 1]) ** 2 + (c * n[:, 2]) ** 2)
    )


def surface_from_spec(spec, norm: Norm):
    """Build a SupportSurface or ParametricPatch from a JSON-style spec."""
    kind = spec.get("kind")
    mesh = norm.mesh
    if kind == "support":
        r = float(spec.get("r", 1.0))
        base = spec.get("q", "sphere")
        if base == "wulff":
            q = ScalarField(mesh, r * norm.tau.values)
        elif base == "sphere":
            q = ScalarField(mesh, np.full(mesh.n_vertices, r))
        else:
            raise ValueError(f"unknown support base {base!r}")
        return from_support(q, norm)
    if kind == "harmonics":
        base = spec.get("base", "wulff")
        r = float(spec.get("r", 1.0))
        vals = r * norm.tau.values if base == "wulff" else np.full(mesh.n_vertices, r)
        for l, m, c in spec.get("coeffs", []):
            vals = vals + float(c) * real_sph_harm(int(l), int(m), mesh.vertices)
        return from_support(ScalarField(mesh, vals), norm)
    if kind == "ellipsoid":
        return from_support(ellipsoid_support(mesh, spec["axes"]), norm)
    if kind == "helicoid":
        return helicoid_patch(
            pitch=float(spec["a"]),
            r_range=tuple(spec.get("r_range", (0.5, 1.5))),
            theta_range=tuple(spec.get("theta_range", (0.0, 2.0 * np.pi))),
            n_r=int(spec.get("n_r", 40)),
            n_theta=int(spec.get("n_theta", 160)),
        )
    raise ValueError(f"unknown surface kind: {kind!r}")
