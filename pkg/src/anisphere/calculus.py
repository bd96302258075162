"""Discrete calculus on the unit sphere: fields, derivatives, quadrature,
and the Monge-Ampere operators.

Conventions.  The covariant Hessian is taken in geodesic normal coordinates,
so coordinate functions satisfy hess(x_i) = -x_i * I and the Laplacian has
eigenvalue -l(l+1) on degree-l spherical harmonics.  The Monge-Ampere
operator is M[u] = det(hess u) = ((lap u)^2 - |hess u|^2) / 2 and its
polarization is M(u, w) = lap(u) lap(w) - <hess u, hess w>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from .errors import MeshMismatchError
from .mesh import SphereMesh, write_field_csv


def _check_same_mesh(*objs):
    base = objs[0].mesh
    for o in objs[1:]:
        if o.mesh is not base:
            raise MeshMismatchError("fields live on different meshes")
    return base


@dataclass
class ScalarField:
    """One real value per mesh vertex."""

    mesh: SphereMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError("value count must equal vertex count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_mesh(self, other)
            return ScalarField(self.mesh, self.values + other.values)
        return ScalarField(self.mesh, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        other_vals = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.mesh, self.values - other_vals)

    def __mul__(self, other):
        other_vals = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.mesh, self.values * other_vals)

    __rmul__ = __mul__

    def save_csv(self, path):
        write_field_csv(path, self.mesh, self.values)


@dataclass
class TangentVectorField:
    """Per-vertex tangent vector, components in the local frame (e1, e2)."""

    mesh: SphereMesh
    components: np.ndarray  # (V, 2)

    def as_vectors(self):
        """Lift to 3-vectors using the vertex frames."""
        e1 = self.mesh.frames[:, 0]
        e2 = self.mesh.frames[:, 1]
        return self.components[:, :1] * e1 + self.components[:, 1:] * e2


@dataclass
class TangentTensorField:
    """Per-vertex symmetric 2x2 tensor in the local frame."""

    mesh: SphereMesh
    comps: np.ndarray  # (V, 3): (a11, a12, a22)

    def as_matrices(self):
        a11, a12, a22 = self.comps.T
        out = np.empty((self.mesh.n_vertices, 2, 2))
        out[:, 0, 0] = a11
        out[:, 0, 1] = a12
        out[:, 1, 0] = a12
        out[:, 1, 1] = a22
        return out

    @property
    def trace(self):
        return self.comps[:, 0] + self.comps[:, 2]

    @property
    def det(self):
        return self.comps[:, 0] * self.comps[:, 2] - self.comps[:, 1] ** 2


def grad(f: ScalarField) -> TangentVectorField:
    """Intrinsic spherical gradient from the local least-squares fits."""
    ops = f.mesh.ops
    return TangentVectorField(
        f.mesh, np.stack([ops["g1"] @ f.values, ops["g2"] @ f.values], axis=1)
    )


def hess(f: ScalarField) -> TangentTensorField:
    """Covariant Hessian on the sphere (symmetric by construction)."""
    ops = f.mesh.ops
    return TangentTensorField(
        f.mesh,
        np.stack(
            [ops["h11"] @ f.values, ops["h12"] @ f.values, ops["h22"] @ f.values],
            axis=1,
        ),
    )


def laplace(f: ScalarField) -> ScalarField:
    """Trace of the covariant Hessian."""
    return ScalarField(f.mesh, f.mesh.ops["lap"] @ f.values)


def integrate(f: ScalarField) -> float:
    """Quadrature sum over vertices (weights sum to the sphere area)."""
    return float(f.mesh.weights @ f.values)


def monge_ampere(u: ScalarField) -> ScalarField:
    """M[u] with -2 M[u] = |hess u|^2 - (lap u)^2, i.e. det of the Hessian."""
    H = hess(u)
    return ScalarField(u.mesh, H.det)


def ma_bilinear(u: ScalarField, w: ScalarField) -> ScalarField:
    """Polarization M(u, w) = d/dt M[u + t w] at t = 0; symmetric in (u, w)."""
    _check_same_mesh(u, w)
    Hu = hess(u)
    Hw = hess(w)
    lu = Hu.trace
    lw = Hw.trace
    frob = (
        Hu.comps[:, 0] * Hw.comps[:, 0]
        + 2.0 * Hu.comps[:, 1] * Hw.comps[:, 1]
        + Hu.comps[:, 2] * Hw.comps[:, 2]
    )
    return ScalarField(u.mesh, lu * lw - frob)


def ibp_residual(u: ScalarField, w: ScalarField, zeta: ScalarField) -> float:
    """Residual of the Monge-Ampere integration-by-parts identity on S^2.

    Returns |int w (M(u, zeta) - K grad u . grad zeta) - int zeta (M(u, w)
    - K grad u . grad w)| with K = 1.  The identity is exact in the
    continuum on a closed surface, so the value is pure discretization error.
    """
    mesh = _check_same_mesh(u, w, zeta)
    gu = grad(u).components
    gz = grad(zeta).components
    gw = grad(w).components
    lhs = w.values * (ma_bilinear(u, zeta).values - np.einsum("ij,ij->i", gu, gz))
    rhs = zeta.values * (ma_bilinear(u, w).values - np.einsum("ij,ij->i", gu, gw))
    return abs(float(mesh.weights @ (lhs - rhs)))


# -- spherical harmonics ---------------------------------------------------------

def real_sph_harm(l, m, points):
    """Real orthonormal spherical harmonic Y_{l,m} at unit 3-vectors.

    Uses the standard convention: m > 0 pairs with cos(m phi), m < 0 with
    sin(|m| phi); the set is orthonormal for the area measure on S^2.
    """
    points = np.atleast_2d(points)
    theta = np.arccos(np.clip(points[:, 2], -1.0, 1.0))
    phi = np.arctan2(points[:, 1], points[:, 0])
    y = sph_harm_y(l, abs(m), theta, phi)
    if m > 0:
        out = np.sqrt(2.0) * (-1.0) ** m * y.real
    elif m < 0:
        out = np.sqrt(2.0) * (-1.0) ** m * y.imag
    else:
        out = y.real
    return out


def harmonic_field(mesh, coeffs) -> ScalarField:
    """Scalar field sum_{(l, m, c)} c * Y_{l,m} on the mesh vertices."""
    vals = np.zeros(mesh.n_vertices)
    for l, m, c in coeffs:
        vals += c * real_sph_harm(int(l), int(m), mesh.vertices)
    return ScalarField(mesh, vals)


def random_band_limited(mesh, lmax, seed, normalize=True) -> ScalarField:
    """Seeded random field with unit coefficients on all modes l <= lmax.

    Coefficients are +-1 chosen by the seed; with `normalize` the field is
    rescaled to unit sup norm so tolerances have a fixed scale.
    """
    rng = np.random.default_rng(seed)
    coeffs = []
    for l in range(lmax + 1):
        for m in range(-l, l + 1):
            coeffs.append((l, m, rng.choice([-1.0, 1.0])))
    f = harmonic_field(mesh, coeffs)
    if normalize:
        f = ScalarField(mesh, f.values / np.abs(f.values).max())
    return f
