"""Hamilton-Jacobi level-set verification of Huygens' principle.

A front function S (signed Euclidean distance at t = 0, negative inside)
evolves by dS/dt + H(grad S) = 0 with Hamiltonian H(p) = |p| tau(p/|p|),
the support function of the Wulff shape: the zero level then propagates at
normal speed tau(nu), matching the parallel surfaces q + t tau of the
support calculus.  The scheme is first-order Lax-Friedrichs with explicit
Euler steps; fronts are extracted by marching cubes and compared by
symmetric point-to-triangle Hausdorff distance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from .errors import CFLViolationError, GridTooSmallError
from .norms import Norm

_MARGIN_CELLS = 5


@dataclass
class LevelGrid:
    """Axis-aligned uniform 3D grid with front function samples."""

    origin: np.ndarray      # (3,)
    spacing: float
    S: np.ndarray           # (nx, ny, nz)
    time: float = 0.0

    @property
    def shape(self):
        return self.S.shape

    def axes(self):
        return [self.origin[i] + self.spacing * np.arange(self.S.shape[i])
                for i in range(3)]

    def sample(self, points):
        """Trilinear interpolation of S at world points."""
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(self.axes(), self.S, bounds_error=False,
                                         fill_value=None)
        return interp(points)

    def save_raw(self, path):
        """Raw binary snapshot: dims (3 int64), spacing, origin (float64), S."""
        with open(path, "wb") as fh:
            np.asarray(self.S.shape, dtype="<i8").tofile(fh)
            np.asarray([self.spacing], dtype="<f8").tofile(fh)
            np.asarray(self.origin, dtype="<f8").tofile(fh)
            self.S.astype("<f8").tofile(fh)

    @classmethod
    def load_raw(cls, path):
        with open(path, "rb") as fh:
            dims = np.fromfile(fh, dtype="<i8", count=3)
            spacing = float(np.fromfile(fh, dtype="<f8", count=1)[0])
            origin = np.fromfile(fh, dtype="<f8", count=3)
            S = np.fromfile(fh, dtype="<f8").reshape(dims)
        return cls(origin=origin, spacing=spacing, S=S)


# -- exact point-to-triangle distances -----------------------------------------

def point_triangle_distance(points, tri0, tri1, tri2):
    """Distance from each point to its triangle (vectorized, same length)."""
    ab = tri1 - tri0
    ac = tri2 - tri0
    ap = points - tri0
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = points - tri1
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = points - tri2
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    closest = np.empty_like(points)
    done = np.zeros(len(points), dtype=bool)

    def _set(mask, value):
        m = mask & ~done
        closest[m] = value[m] if value.ndim == 2 else value
        done[m] = True

    _set((d1 <= 0) & (d2 <= 0), tri0)
    _set((d3 >= 0) & (d4 <= d3), tri1)
    _set((d6 >= 0) & (d5 <= d6), tri2)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        _set((vc <= 0) & (d1 >= 0) & (d3 <= 0), tri0 + v_ab[:, None] * ab)
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        _set((vb <= 0) & (d2 >= 0) & (d6 <= 0), tri0 + w_ac[:, None] * ac)
        denom_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(denom_bc != 0, (d4 - d3) / denom_bc, 0.0)
        _set((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
             tri1 + w_bc[:, None] * (tri2 - tri1))
        denom = va + vb + vc
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
        _set(np.ones(len(points), dtype=bool), tri0 + v[:, None] * ab + w[:, None] * ac)
    return np.linalg.norm(points - closest, axis=1)


def distance_to_mesh(points, vertices, faces, k=12, signed=False):
    """Exact distance from points to a triangle mesh via candidate faces.

    With `signed`, the sign comes from the side of the nearest face plane
    (correct for convex closed surfaces, negative inside).
    """
    cent = vertices[faces].mean(axis=1)
    tree = cKDTree(cent)
    k = min(k, len(faces))
    out = np.empty(len(points))
    sign = np.ones(len(points))
    block = 65536
    for i in range(0, len(points), block):
        pts = points[i: i + block]
        _, cand = tree.query(pts, k=k)
        cand = np.atleast_2d(cand)
        best = np.full(len(pts), np.inf)
        best_face = np.zeros(len(pts), dtype=np.int64)
        for j in range(cand.shape[1]):
            f = cand[:, j]
            d = point_triangle_distance(pts, vertices[faces[f, 0]],
                                        vertices[faces[f, 1]],
                                        vertices[faces[f, 2]])
            better = d < best
            best[better] = d[better]
            best_face[better] = f[better]
        out[i: i + block] = best
        if signed:
            f = best_face
            n = np.cross(vertices[faces[f, 1]] - vertices[faces[f, 0]],
                         vertices[faces[f, 2]] - vertices[faces[f, 0]])
            side = np.einsum("ij,ij->i", pts - cent[f], n)
            sign[i: i + block] = np.where(side >= 0, 1.0, -1.0)
    return out * sign if signed else out


# -- initialization ----------------------------------------------------------------

def init_from_surface(vertices, faces, n=96, extent=None, margin=_MARGIN_CELLS):
    """Signed Euclidean distance grid around a closed surface mesh.

    Raises GridTooSmallError unless the surface fits with at least
    `margin` cells to every grid boundary.
    """
    vertices = np.asarray(vertices, dtype=float)
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    if extent is None:
        pad = 0.35 * float((hi - lo).max()) + 2.0 / n
        extent = (lo.min() - pad, hi.max() + pad)
    lo_e, hi_e = float(extent[0]), float(extent[1])
    h = (hi_e - lo_e) / (n - 1)
    if (lo - lo_e).min() < margin * h or (hi_e - hi).min() < margin * h:
        raise GridTooSmallError(
            f"surface needs {margin} cells of margin on a {n}^3 grid over "
            f"[{lo_e:.3g}, {hi_e:.3g}]^3"
        )
    ax = lo_e + h * np.arange(n)
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    S = distance_to_mesh(pts, vertices, np.asarray(faces), signed=True)
    return LevelGrid(origin=np.full(3, lo_e), spacing=h, S=S.reshape(n, n, n))


# -- Lax-Friedrichs stepping ---------------------------------------------------------

def dissipation_bounds(norm: Norm, pad=1.05):
    """Component bounds alpha_i on |dH/dp_i| = |xi_i| over the Wulff shape."""
    return pad * np.abs(norm.xi).max(axis=0)


def max_phase_speed(norm: Norm):
    """Largest Lax-Friedrichs bound on the Hamiltonian gradient."""
    return float(dissipation_bounds(norm).max())


def stable_dt(norm: Norm, grid: LevelGrid, cfl=0.9):
    """Monotone step for the 3D Lax-Friedrichs scheme."""
    return cfl * grid.spacing / float(dissipation_bounds(norm).sum())


def hj_step(norm: Norm, grid: LevelGrid, dt: float) -> LevelGrid:
    """One explicit Lax-Friedrichs step of dS/dt + T*(grad S) = 0.

    Raises CFLViolationError when dt exceeds 0.5 h / max_phase_speed.
    """
    h = grid.spacing
    if dt > 0.5 * h / max_phase_speed(norm) + 1e-15:
        raise CFLViolationError(
            f"dt = {dt:.4g} exceeds 0.5 h / max speed = "
            f"{0.5 * h / max_phase_speed(norm):.4g}"
        )
    S = grid.S
    alpha = dissipation_bounds(norm)
    pm = []
    pp = []
    for ax in range(3):
        Sp = np.concatenate([S.take(np.arange(1, S.shape[ax]), axis=ax),
                             S.take([-1], axis=ax)], axis=ax)
        Sm = np.concatenate([S.take([0], axis=ax),
                             S.take(np.arange(0, S.shape[ax] - 1), axis=ax)],
                            axis=ax)
        pp.append((Sp - S) / h)
        pm.append((S - Sm) / h)
    pbar = np.stack([(pm[i] + pp[i]) / 2.0 for i in range(3)], axis=3)
    H = norm.support_analytic(pbar.reshape(-1, 3)).reshape(S.shape)
    for i in range(3):
        H = H - 0.5 * alpha[i] * (pp[i] - pm[i])
    return replace(grid, S=S - dt * H, time=grid.time + dt)


def propagate_to(norm: Norm, grid: LevelGrid, t: float, cfl=0.9) -> LevelGrid:
    """Advance the front to time `t` in monotone steps."""
    remaining = t - grid.time
    dt0 = min(stable_dt(norm, grid, cfl), 0.5 * grid.spacing / max_phase_speed(norm))
    while remaining > 1e-12:
        dt = min(dt0, remaining)
        grid = hj_step(norm, grid, dt)
        remaining = t - grid.time
    return grid


def extract_front(grid: LevelGrid):
    """Marching-cubes triangulation of the zero level set."""
    verts, faces, _, _ = measure.marching_cubes(
        grid.S, level=0.0, spacing=(grid.spacing,) * 3
    )
    return verts + grid.origin, faces.astype(np.int64)


def hausdorff_distance(verts_a, faces_a, verts_b, faces_b):
    """Symmetric vertex-to-surface Hausdorff distance between two meshes."""
    d_ab = distance_to_mesh(verts_a, verts_b, faces_b).max()
    d_ba = distance_to_mesh(verts_b, verts_a, faces_a).max()
    return float(max(d_ab, d_ba))


def huygens_check(norm: Norm, surface, t: float, n=96, cfl=0.9):
    """Hausdorff distance between the HJ front at time t and X + t xi.

    `surface` is a SupportSurface; its mesh initializes the signed distance
    grid, the front is advanced to t, extracted by marching cubes and
    compared against the parallel surface of the support calculus.
    """
    from .surfaces import from_support, parallel_support

    q_t = parallel_support(surface.q, t, norm)
    par = from_support(q_t, norm)
    all_pts = np.vstack([surface.X, par.X])
    lo, hi = all_pts.min(), all_pts.max()
    pad = 0.2 * (hi - lo)
    grid = init_from_surface(surface.X, surface.mesh.faces, n=n,
                             extent=(lo - pad, hi + pad))
    grid = propagate_to(norm, grid, t, cfl=cfl)
    fv, ff = extract_front(grid)
    return hausdorff_distance(fv, ff, par.X, par.mesh.faces), grid
