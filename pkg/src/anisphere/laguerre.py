"""The anisotropic Laguerre functional, surface energy and gauge invariants.

All integrands are written through det A and det(D^2 q + q I) so no discrete
curvature is ever divided by: with A = (D^2 q + q I)(D^2 tau + tau I)^{-1},

    (1/lambda_1 - 1/lambda_2)^2 = eta^2 - 4 det A,
    dW = det(D^2 tau + tau I) d sigma,   d Sigma = det(D^2 q + q I) d sigma,
    T*(nu) = tau(nu)  (support function of the Wulff shape).

The Laguerre functional vanishes on every rescaled Wulff shape, is invariant
under parallel translation q -> q + t tau (exactly so in this discretization)
and scales quadratically under q -> r q.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .calculus import ScalarField, integrate
from .norms import Norm
from .surfaces import SupportSurface, from_support

_RATIO_FLOOR = 1e-8


def laguerre_functional(surface: SupportSurface) -> float:
    """(1/4) int (1/lambda_1 - 1/lambda_2)^2 dW over the surface.

    Evaluated as (1/4) int (eta^2 - 4 det A) / K_W d sigma; zero exactly
    when the surface is a rescaled Wulff shape.
    """
    eta = surface.eta.values
    density = (eta ** 2 - 4.0 * surface.det_A) / surface.norm.kW.values
    return 0.25 * float(surface.mesh.weights @ density)


def area_W(norm: Norm) -> float:
    """Area of the Wulff shape, int dW = int det(D^2 tau + tau I) d sigma."""
    return float(norm.mesh.weights @ norm.det_B)


def energy(surface: SupportSurface) -> float:
    """Anisotropic surface energy int T*(nu) d Sigma = int tau det(D^2q + qI) d sigma."""
    return float(surface.mesh.weights @ (surface.norm.tau.values * surface.det_M))


def wulff_volume_quadrature(norm: Norm) -> float:
    """Wulff volume (1/3) int tau det(D^2 tau + tau I) d sigma.

    Smooth-integrand counterpart of the divergence-theorem `wulff_volume`;
    used inside the gauge invariant I, where the inscribed-mesh volume bias
    would dominate the near-cancellation (I is a difference of squares that
    vanishes on spheres).  With this volume, parallel invariance of I is an
    algebraic identity of the discretization.
    """
    return float(norm.mesh.weights @ (norm.tau.values * norm.det_B)) / 3.0


def gauge_invariant_I(surface: SupportSurface, form="dW") -> float:
    """The integrated-discriminant invariant I of the parallel family.

    form="dW":     I = (int T* eta dW)^2 - 12 vol(W) F[Sigma], with the
                   quadrature Wulff volume;
    form="Lambda": I = (int T* Lambda d Sigma)^2 - 4 F[Sigma] int T*
                   (K_Sigma / K_W) d Sigma, through the per-vertex
                   anisotropic mean curvature Lambda = lambda_1 + lambda_2
                   and curvature ratio 1 / det A.
    The two routes coincide analytically; numerically they guard each other
    against sign or determinant slips.  I = 0 on spheres and Wulff shapes.
    """
    norm = surface.norm
    w = surface.mesh.weights
    tau = norm.tau.values
    F = energy(surface)
    if form == "dW":
        first = float(w @ (tau * surface.eta.values * norm.det_B))
        return first ** 2 - 12.0 * wulff_volume_quadrature(norm) * F
    if form == "Lambda":
        lam1 = surface.lambda1.values
        lam2 = surface.lambda2.values
        first = float(w @ (tau * (lam1 + lam2) * surface.det_M))
        second = float(w @ (tau * (1.0 / surface.det_A) * surface.det_M))
        return first ** 2 - 4.0 * F * second
    raise ValueError(f"unknown form {form!r}")


def q_density(surface: SupportSurface, t: float) -> ScalarField:
    """Energy density Q(p, t) = T*(nu)(t^2 + eta t + det A) of X + t xi."""
    norm = surface.norm
    vals = norm.tau.values * (
        t ** 2 + surface.eta.values * t + surface.det_A
    )
    return ScalarField(surface.mesh, vals)


def q_discriminant(surface: SupportSurface) -> ScalarField:
    """Pointwise discriminant of Q in t: T*^2 (eta^2 - 4 det A), gauge invariant."""
    norm = surface.norm
    vals = norm.tau.values ** 2 * (surface.eta.values ** 2 - 4.0 * surface.det_A)
    return ScalarField(surface.mesh, vals)


def steiner_coefficients(surface: SupportSurface):
    """Coefficients (c0, c1, c2, c3) of the volume cubic V(t) of X + t xi.

    V(t) is computed by divergence-theorem quadrature of the parallel mesh
    at four values of t; the discrete V(t) is exactly cubic, so the
    interpolation is exact.
    """
    ts = np.array([-0.75, -0.25, 0.25, 0.75])
    vols = np.array([surface.enclosed_volume(t) for t in ts])
    # Vandermonde solve for the cubic coefficients
    V = np.vander(ts, 4, increasing=True)
    c = np.linalg.solve(V, vols)
    return tuple(float(x) for x in c)


@dataclass
class InvariantReport:
    """Gauge-invariant summary of one surface."""

    laguerre: float
    energy: float
    invariant_I: float
    invariant_I_Lambda: float
    ratio: float | None
    steiner: tuple
    meta: dict

    def to_dict(self):
        return asdict(self)


def invariant_report(surface: SupportSurface, meta=None) -> InvariantReport:
    L = laguerre_functional(surface)
    I = gauge_invariant_I(surface, form="dW")
    I2 = gauge_invariant_I(surface, form="Lambda")
    floor = _RATIO_FLOOR * area_W(surface.norm)
    ratio = I / L if abs(L) > floor else None
    info = {
        "subdivisions": surface.mesh.subdivisions,
        "norm": surface.norm.spec,
        "ratio_floor": floor,
    }
    if meta:
        info.update(meta)
    return InvariantReport(
        laguerre=L,
        energy=energy(surface),
        invariant_I=I,
        invariant_I_Lambda=I2,
        ratio=ratio,
        steiner=steiner_coefficients(surface),
        meta=info,
    )


def compare_wavefronts(q1: ScalarField, q2: ScalarField, norm: Norm,
                       tol_rel=0.05) -> dict:
    """Source discrimination by the Laguerre functional.

    distinct_source is True only when |L1 - L2| exceeds tol_rel times the
    larger functional; a False verdict means "inconclusive -- consistent
    with a common source", never "same source".
    """
    s1 = from_support(q1, norm)
    s2 = from_support(q2, norm)
    L1 = laguerre_functional(s1)
    L2 = laguerre_functional(s2)
    I1 = gauge_invariant_I(s1)
    I2 = gauge_invariant_I(s2)
    floor = _RATIO_FLOOR * area_W(norm)
    distinct = abs(L1 - L2) > tol_rel * max(abs(L1), abs(L2), floor)
    return {
        "L1": L1,
        "L2": L2,
        "I1": I1,
        "I2": I2,
        "distinct_source": bool(distinct),
        "verdict": "distinct sources" if distinct
                   else "inconclusive -- consistent with a common source",
        "tol_rel": tol_rel,
    }
