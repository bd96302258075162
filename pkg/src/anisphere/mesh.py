"""Triangulated unit sphere with tangent frames, quadrature and derivative stencils.

The mesh is a subdivided icosahedron projected to the unit sphere.  Each vertex
carries an orthonormal tangent frame (e1, e2), a quadrature weight in
steradians, and least-squares fit coefficients over its 2-ring neighborhood
that realize first and second intrinsic derivatives in geodesic normal
coordinates.  Meshes are immutable after construction; every operation here is
a pure function of the stored arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

MAX_SUBDIVISIONS = 8

# Icosahedron with vertices on the unit sphere (golden-ratio construction).
_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def _normalized(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _subdivide(vertices, faces):
    """Split each face into four, placing edge midpoints on the unit sphere."""
    edges = np.sort(
        np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1
    )
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    midpoints = _normalized(vertices[uniq[:, 0]] + vertices[uniq[:, 1]])
    mid_idx = len(vertices) + np.arange(len(uniq))
    m01, m12, m20 = (
        mid_idx[inverse[: len(faces)]],
        mid_idx[inverse[len(faces): 2 * len(faces)]],
        mid_idx[inverse[2 * len(faces):]],
    )
    v0, v1, v2 = faces[:, 0], faces[:, 1], faces[:, 2]
    new_faces = np.concatenate(
        [
            np.stack([v0, m01, m20], axis=1),
            np.stack([v1, m12, m01], axis=1),
            np.stack([v2, m20, m12], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return np.concatenate([vertices, midpoints]), new_faces


def _orient_outward(vertices, faces):
    """Flip faces so each triangle is counter-clockwise seen from outside."""
    v0, v1, v2 = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    vol = np.einsum("ij,ij->i", v0, np.cross(v1 - v0, v2 - v0))
    flip = vol < 0
    faces = faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def _tangent_frames(vertices):
    """Deterministic orthonormal tangent pair (e1, e2) at each vertex."""
    n = vertices
    ref = np.tile(np.array([0.0, 0.0, 1.0]), (len(n), 1))
    ref[np.abs(n[:, 2]) > 0.9] = np.array([1.0, 0.0, 0.0])
    e1 = ref - (np.einsum("ij,ij->i", ref, n))[:, None] * n
    e1 = _normalized(e1)
    e2 = np.cross(n, e1)
    return np.stack([e1, e2], axis=1)


def _mixed_voronoi_weights(vertices, faces):
    """Per-vertex mixed Voronoi areas (barycentric split for obtuse corners)."""
    nv = len(vertices)
    p0, p1, p2 = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    w = np.zeros(nv)
    # squared edge lengths opposite each corner
    l0 = np.einsum("ij,ij->i", p2 - p1, p2 - p1)
    l1 = np.einsum("ij,ij->i", p0 - p2, p0 - p2)
    l2 = np.einsum("ij,ij->i", p1 - p0, p1 - p0)
    lsq = np.stack([l0, l1, l2], axis=1)
    # cotangent at each corner
    def _cot(a, b, c):
        # angle at the corner between edges to b and c
        u, v = b - a, c - a
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        return np.einsum("ij,ij->i", u, v) / np.maximum(cross, 1e-300)

    cot = np.stack([_cot(p0, p1, p2), _cot(p1, p2, p0), _cot(p2, p0, p1)], axis=1)
    obtuse = cot < 0.0
    any_obtuse = obtuse.any(axis=1)

    # Voronoi contribution at corner i: (l_j * cot_j + l_k * cot_k) / 8
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        vor = (lsq[:, j] * cot[:, j] + lsq[:, k] * cot[:, k]) / 8.0
        contrib = np.where(
            any_obtuse,
            np.where(obtuse[:, i], areas / 2.0, areas / 4.0),
            vor,
        )
        np.add.at(w, faces[:, i], contrib)
    return w


_FIT_CUBIC_COLS = 10  # 1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3


def _design_matrix(xy, ncols):
    x, y = xy[..., 0], xy[..., 1]
    cols = [np.ones_like(x), x, y, x * x, x * y, y * y,
            x ** 3, x * x * y, x * y * y, y ** 3]
    return np.stack(cols[:ncols], axis=-1)


@dataclass
class SphereMesh:
    """Subdivided-icosahedron discretization of the unit sphere.

    Attributes
    ----------
    vertices : (V, 3) unit vectors
    faces : (F, 3) vertex index triples, outward counter-clockwise
    frames : (V, 2, 3) orthonormal tangent pairs (e1, e2)
    weights : (V,) quadrature weights, positive, summing to 4*pi
    subdivisions : subdivision count used to build the mesh
    """

    vertices: np.ndarray
    faces: np.ndarray
    frames: np.ndarray
    weights: np.ndarray
    subdivisions: int
    stencil_idx: list = field(repr=False, default=None)
    stencil_pinv: list = field(repr=False, default=None)
    stencil_scale: np.ndarray = field(repr=False, default=None)
    _ops: dict = field(repr=False, default=None)
    _face_tree: object = field(repr=False, default=None)
    _adjacency: list = field(repr=False, default=None)

    # -- construction ------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def mean_spacing(self):
        """Mean edge length, the resolution scale h."""
        e = self.vertices[self.faces[:, 0]] - self.vertices[self.faces[:, 1]]
        return float(np.mean(np.linalg.norm(e, axis=1)))

    @property
    def adjacency(self):
        """1-ring neighbor lists (arrays of vertex indices)."""
        if self._adjacency is None:
            nbr = [set() for _ in range(self.n_vertices)]
            for a, b, c in self.faces:
                nbr[a].update((b, c))
                nbr[b].update((a, c))
                nbr[c].update((a, b))
            self._adjacency = [np.fromiter(s, dtype=np.int64) for s in nbr]
        return self._adjacency

    # -- derivative stencils -------------------------------------------------

    def _normal_coords(self, center, nbrs):
        """Geodesic normal coordinates of neighbor vertices around a vertex."""
        nu = self.vertices[center]
        e1, e2 = self.frames[center]
        pts = self.vertices[nbrs]
        c = np.clip(pts @ nu, -1.0, 1.0)
        r = np.arccos(c)
        t = pts - c[:, None] * nu
        tn = np.linalg.norm(t, axis=1)
        tdir = np.divide(t, tn[:, None], out=np.zeros_like(t), where=tn[:, None] > 1e-14)
        return np.stack([r * (tdir @ e1), r * (tdir @ e2)], axis=1)

    def _build_stencils(self):
        adj = self.adjacency
        idx_list = []
        coords = []
        for v in range(self.n_vertices):
            ring1 = adj[v]
            ring2 = set()
            for u in ring1:
                ring2.update(adj[u])
            ring2.discard(v)
            ring2.difference_update(ring1.tolist())
            nbrs = np.concatenate(
                [np.array([v]), ring1, np.fromiter(sorted(ring2), dtype=np.int64)]
            )
            idx_list.append(nbrs)
            coords.append(self._normal_coords(v, nbrs))

        scales = np.array([max(np.abs(c).max(), 1e-12) for c in coords])
        pinvs = [None] * self.n_vertices
        sizes = np.array([len(ix) for ix in idx_list])
        for m in np.unique(sizes):
            sel = np.where(sizes == m)[0]
            xy = np.stack([coords[v] / scales[v] for v in sel])
            M = _design_matrix(xy, _FIT_CUBIC_COLS)
            P = np.linalg.pinv(M)
            for k, v in enumerate(sel):
                pinvs[v] = P[k]
        self.stencil_idx = idx_list
        self.stencil_pinv = pinvs
        self.stencil_scale = scales

    def _build_ops(self):
        if self.stencil_idx is None:
            self._build_stencils()
        nv = self.n_vertices
        rows, cols = [], []
        data = {k: [] for k in ("g1", "g2", "h11", "h12", "h22")}
        for v in range(nv):
            ix = self.stencil_idx[v]
            P = self.stencil_pinv[v]
            s = self.stencil_scale[v]
            rows.append(np.full(len(ix), v))
            cols.append(ix)
            data["g1"].append(P[1] / s)
            data["g2"].append(P[2] / s)
            data["h11"].append(2.0 * P[3] / s ** 2)
            data["h12"].append(P[4] / s ** 2)
            data["h22"].append(2.0 * P[5] / s ** 2)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        ops = {}
        for k, vals in data.items():
            ops[k] = sparse.csr_matrix(
                (np.concatenate(vals), (rows, cols)), shape=(nv, nv)
            )
        ops["lap"] = (ops["h11"] + ops["h22"]).tocsr()
        self._ops = ops

    @property
    def ops(self):
        """Sparse derivative operators g1, g2, h11, h12, h22, lap (V x V)."""
        if self._ops is None:
            self._build_ops()
        return self._ops

    # -- point location ------------------------------------------------------

    def locate(self, directions):
        """Containing face and barycentric ray weights for unit directions.

        Returns (face_indices, bary) where bary rows are nonnegative and sum
        to one; the ray from the origin through each direction meets its face
        at the barycentric combination of the face vertices.
        """
        directions = np.atleast_2d(directions)
        if self._face_tree is None:
            cent = _normalized(self.vertices[self.faces].mean(axis=1))
            self._face_tree = cKDTree(cent)
        k = min(12, self.n_faces)
        _, cand = self._face_tree.query(directions, k=k)
        cand = np.atleast_2d(cand)
        n = len(directions)
        face_out = np.full(n, -1, dtype=np.int64)
        bary_out = np.zeros((n, 3))
        remaining = np.arange(n)
        for j in range(cand.shape[1]):
            if len(remaining) == 0:
                break
            f = cand[remaining, j]
            tri = self.vertices[self.faces[f]]          # (m, 3 verts, 3)
            M = tri.transpose(0, 2, 1)                   # columns are vertices
            try:
                b = np.linalg.solve(M, directions[remaining][..., None])[..., 0]
            except np.linalg.LinAlgError:
                continue
            ok = (b >= -1e-10).all(axis=1)
            hit = remaining[ok]
            bsel = b[ok]
            ssum = bsel.sum(axis=1)
            face_out[hit] = f[ok]
            bary_out[hit] = bsel / ssum[:, None]
            remaining = remaining[~ok]
        if len(remaining):
            # exhaustive fallback (rare: near-degenerate query directions)
            for i in remaining:
                tri = self.vertices[self.faces].transpose(0, 2, 1)
                rhs = np.broadcast_to(directions[i], (self.n_faces, 3))[..., None]
                b = np.linalg.solve(tri, rhs)[..., 0]
                ok = np.where((b >= -1e-9).all(axis=1))[0]
                fidx = ok[0]
                face_out[i] = fidx
                bary_out[i] = b[fidx] / b[fidx].sum()
        return face_out, bary_out

    def interpolate(self, values, directions):
        """Barycentric interpolation of a per-vertex array at unit directions."""
        f, b = self.locate(directions)
        tri = self.faces[f]
        vals = values[tri]
        if vals.ndim == 2:
            return np.einsum("ij,ij->i", vals, b)
        return np.einsum("ijk,ij->ik", vals, b)

    # -- export ---------------------------------------------------------------

    def save_obj(self, path, points=None):
        """Write an ASCII OBJ (v/f records); `points` overrides vertex positions."""
        write_obj(path, self.vertices if points is None else points, self.faces)


def build_icosphere(subdivisions):
    """Icosahedron subdivided `subdivisions` times, projected to the sphere.

    Vertex count is 10 * 4**s + 2.  Raises ValueError outside 0 <= s <= 8.
    """
    if not (0 <= int(subdivisions) <= MAX_SUBDIVISIONS):
        raise ValueError(
            f"subdivisions must be in [0, {MAX_SUBDIVISIONS}], got {subdivisions}"
        )
    subdivisions = int(subdivisions)
    vertices = _normalized(_ICO_VERTS)
    faces = _ICO_FACES
    for _ in range(subdivisions):
        vertices, faces = _subdivide(vertices, faces)
    faces = _orient_outward(vertices, faces)
    vertices = _normalized(vertices)
    weights = _mixed_voronoi_weights(vertices, faces)
    weights *= 4.0 * math.pi / weights.sum()
    return SphereMesh(
        vertices=vertices,
        faces=faces,
        frames=_tangent_frames(vertices),
        weights=weights,
        subdivisions=subdivisions,
    )


# -- OBJ / CSV I/O -------------------------------------------------------------

def write_obj(path, vertices, faces):
    with open(path, "w") as fh:
        for v in vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")


def read_obj(path):
    """Read v/f records from an ASCII OBJ; returns (vertices, faces)."""
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def write_field_csv(path, mesh, values, header="vertex,x,y,z,value"):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, (p, val) in enumerate(zip(mesh.vertices, values)):
            fh.write(f"{i},{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},{val:.17g}\n")
