"""Discrete Laplace-Beltrami operators and geometric measurements on meshes."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import AssemblyError, InvalidArgumentError
from .mesh import TriangleMesh

__all__ = [
    "OperatorPair",
    "assemble_operators",
    "CurvatureField",
    "corner_angles",
    "gauss_curvature",
    "face_gradient",
    "IsoContour",
    "level_set_length",
    "write_vertex_field",
    "read_vertex_field",
]


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """Cotangent stiffness ``S`` (weak ``-Lap``) and lumped mass ``M``.

    ``mass_diag`` holds the diagonal of ``M``; ``mass`` is the same as a
    sparse matrix.
    """

    stiffness: sparse.csr_matrix
    mass_diag: np.ndarray

    @property
    def mass(self) -> sparse.dia_matrix:
        return sparse.diags(self.mass_diag)

    @property
    def n(self) -> int:
        return len(self.mass_diag)

    def apply_stiffness(self, u) -> np.ndarray:
        """``S @ u`` evaluated as ``sum_j S_ij (u_j - u_i)``.

        Equal to the plain product in exact arithmetic because the rows sum
        to zero, but far less cancellation where ``u`` is nearly constant
        and the weights are large (small cells near poles, graded grids).
        """
        S = self.stiffness
        rows = np.repeat(np.arange(S.shape[0]), np.diff(S.indptr))
        terms = S.data * (u[S.indices] - u[rows])
        return np.bincount(rows, weights=terms, minlength=S.shape[0])

    def dirichlet(self, u) -> float:
        """``u^T S u`` as the edge sum ``sum_{i<j} -S_ij (u_i - u_j)^2``."""
        S = self.stiffness
        rows = np.repeat(np.arange(S.shape[0]), np.diff(S.indptr))
        upper = S.indices > rows
        d = u[rows[upper]] - u[S.indices[upper]]
        return float(-np.sum(S.data[upper] * d * d))


def _cotangents(mesh: TriangleMesh) -> np.ndarray:
    L = mesh.edge_lengths()
    A = mesh.face_areas()
    L2 = L * L
    cot = np.empty_like(L)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        cot[:, k] = (L2[:, i] + L2[:, j] - L2[:, k]) / (4.0 * A)
    bad = np.flatnonzero(~np.isfinite(cot).all(axis=1))
    if len(bad):
        raise AssemblyError(f"non-finite cotangent weight on face {int(bad[0])}", face=int(bad[0]))
    return cot


def assemble_operators(mesh: TriangleMesh) -> OperatorPair:
    """Piecewise-linear stiffness with cotangent weights and barycentric lumped mass.

    ``S_ij = -(cot a_ij + cot b_ij) / 2`` for each edge; the diagonal is set
    to minus the off-diagonal row sum so ``S @ 1`` vanishes to rounding.
    ``M_ii`` is one third of the area of the faces around vertex ``i``.
    """
    cot = _cotangents(mesh)
    f = mesh.faces
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = f[:, (k + 1) % 3], f[:, (k + 2) % 3]
        w = -0.5 * cot[:, k]
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    off = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(n, n))
    off.sum_duplicates()
    off.sort_indices()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    S = (off + sparse.diags(diag)).tocsr()
    S.sort_indices()
    A = mesh.face_areas()
    mass = np.bincount(f.ravel(), weights=np.repeat(A / 3.0, 3), minlength=n)
    return OperatorPair(S, mass)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Angle-defect Gauss curvature per vertex."""

    K: np.ndarray
    vertex_areas: np.ndarray
    angle_defect: np.ndarray

    @property
    def total(self) -> float:
        """``sum_i defect_i``, equal to ``2 pi chi``."""
        return float(np.sum(self.angle_defect))


def corner_angles(mesh: TriangleMesh) -> np.ndarray:
    """(F, 3) interior angles; column k is the angle at corner k."""
    L = mesh.edge_lengths()
    A = mesh.face_areas()
    L2 = L * L
    ang = np.empty_like(L)
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        ang[:, k] = np.arctan2(4.0 * A, L2[:, i] + L2[:, j] - L2[:, k])
    return ang


def gauss_curvature(mesh: TriangleMesh) -> CurvatureField:
    """``K_i = (2 pi - sum of corner angles at i) / A_i`` with barycentric ``A_i``."""
    ang = corner_angles(mesh)
    n = mesh.n_vertices
    total = np.bincount(mesh.faces.ravel(), weights=ang.ravel(), minlength=n)
    defect = 2.0 * np.pi - total
    areas = np.bincount(mesh.faces.ravel(), weights=np.repeat(mesh.face_areas() / 3.0, 3),
                        minlength=n)
    return CurvatureField(defect / areas, areas, defect)


def _check_field(mesh, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise InvalidArgumentError(
            f"field has shape {u.shape}, mesh has {mesh.n_vertices} vertices")
    return u


def _basis_gradients(mesh: TriangleMesh) -> np.ndarray:
    """(F, 3, 2) gradients of the hat functions in each face's local frame."""
    if "grad_basis" not in mesh._cache:
        xy = mesh.local_coords()
        A2 = 2.0 * mesh.face_areas()
        G = np.empty_like(xy)
        for k in range(3):
            e = xy[:, (k + 2) % 3] - xy[:, (k + 1) % 3]
            # rotate the opposite edge by +90 degrees (counter-clockwise faces)
            G[:, k, 0] = -e[:, 1] / A2
            G[:, k, 1] = e[:, 0] / A2
        mesh._cache["grad_basis"] = G
    return mesh._cache["grad_basis"]


def face_gradient(mesh: TriangleMesh, u) -> np.ndarray:
    """Gradient of the piecewise-linear interpolant of ``u``, one 2-vector per face.

    Vectors are expressed in the orthonormal frame of
    :meth:`TriangleMesh.local_coords` (the chart frame on the flat torus).
    """
    u = _check_field(mesh, u)
    return np.einsum("fkd,fk->fd", _basis_gradients(mesh), u[mesh.faces])


@dataclass(frozen=True, eq=False)
class IsoContour:
    """Closed polylines of ``{u = c}``.

    ``polylines[i]`` is an (m, D) array of points, with the closing point
    not repeated; ``edges[i]`` and ``weights[i]`` give, for each point, the
    mesh edge ``(a, b)`` it lies on and the fraction ``s`` from ``a`` to
    ``b``, so any vertex quantity can be interpolated onto the contour.
    """

    polylines: list
    edges: list
    weights: list
    segment_lengths: list
    level: float

    @property
    def total_length(self) -> float:
        return float(sum(np.sum(s) for s in self.segment_lengths))

    @property
    def empty(self) -> bool:
        return len(self.polylines) == 0

    def interpolate(self, values) -> list:
        values = np.asarray(values, dtype=float)
        return [(1.0 - w) * values[e[:, 0]] + w * values[e[:, 1]]
                for e, w in zip(self.edges, self.weights)]


def level_set_length(mesh: TriangleMesh, u, c: float) -> IsoContour:
    """Marching-triangles extraction of ``{u = c}`` joined into closed polylines.

    Vertex values equal to ``c`` are nudged up by one ulp first, so every
    crossing lies strictly inside an edge.  Polylines start at the
    lexicographically smallest crossed edge and the output is deterministic.
    Segment lengths are measured in each face's own frame, which makes the
    result intrinsic (and valid on the flat torus).
    """
    u = _check_field(mesh, u).copy()
    tie = u == c
    u[tie] = np.nextafter(u[tie], np.inf)
    if not (u.min() < c < u.max()):
        return IsoContour([], [], [], [], float(c))
    f = mesh.faces
    above = u[f] > c
    n_above = above.sum(axis=1)
    cut = np.flatnonzero((n_above == 1) | (n_above == 2))
    xy = mesh.local_coords()

    # crossing edges of each cut face, as (face, k) where edge k joins corners k+1, k+2
    seg_edges = []
    for fi in cut:
        ks = [k for k in range(3) if above[fi, (k + 1) % 3] != above[fi, (k + 2) % 3]]
        seg_edges.append(ks)
    seg_edges = np.array(seg_edges, dtype=np.int64)

    def edge_key(fi, k):
        a, b = f[fi, (k + 1) % 3], f[fi, (k + 2) % 3]
        return (a, b) if a < b else (b, a)

    def crossing(fi, k):
        ia, ib = (k + 1) % 3, (k + 2) % 3
        ua, ub = u[f[fi, ia]], u[f[fi, ib]]
        s = (c - ua) / (ub - ua)
        return ia, ib, s

    adjacency: dict = {}
    seg_len = {}
    for row, fi in enumerate(cut):
        pts = []
        keys = []
        for k in seg_edges[row]:
            ia, ib, s = crossing(fi, k)
            pts.append((1.0 - s) * xy[fi, ia] + s * xy[fi, ib])
            keys.append(edge_key(fi, k))
        length = float(np.linalg.norm(pts[1] - pts[0]))
        k0, k1 = keys
        adjacency.setdefault(k0, []).append((k1, fi))
        adjacency.setdefault(k1, []).append((k0, fi))
        seg_len[(min(k0, k1), max(k0, k1), fi)] = length

    def position(key):
        a, b = key
        ua, ub = u[a], u[b]
        s = (c - ua) / (ub - ua)
        if mesh.vertices is not None:
            return (1.0 - s) * mesh.vertices[a] + s * mesh.vertices[b], s
        chart = mesh.periodic_identification["chart"]
        Lx, Ly = mesh.periodic_identification["side_lengths"]
        d = chart[b] - chart[a]
        d -= np.array([Lx, Ly]) * np.round(d / np.array([Lx, Ly]))
        p = chart[a] + s * d
        return np.mod(p, [Lx, Ly]), s

    visited_faces = set()
    polylines, edges_out, weights_out, lengths_out = [], [], [], []
    for start in sorted(adjacency):
        if all(fi in visited_faces for _, fi in adjacency[start]):
            continue
        chain = [start]
        seglens = []
        prev_face = None
        cur = start
        while True:
            options = [(nxt, fi) for nxt, fi in adjacency[cur]
                       if fi not in visited_faces and fi != prev_face]
            if not options:
                break
            nxt, fi = min(options)
            visited_faces.add(fi)
            seglens.append(seg_len[(min(cur, nxt), max(cur, nxt), fi)])
            prev_face = fi
            if nxt == start:
                break
            chain.append(nxt)
            cur = nxt
        pts, ws = zip(*(position(k) for k in chain))
        polylines.append(np.array(pts))
        edges_out.append(np.array(chain, dtype=np.int64))
        weights_out.append(np.array(ws))
        lengths_out.append(np.array(seglens))
    return IsoContour(polylines, edges_out, weights_out, lengths_out, float(c))


def write_vertex_field(path, values) -> None:
    """CSV with header ``vertex_id,value`` and LF line endings."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("vertex field has non-finite entries")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["vertex_id", "value"])
        for i, v in enumerate(values):
            wr.writerow([i, repr(float(v))])


def read_vertex_field(path, n_vertices: int | None = None) -> np.ndarray:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if [h.strip() for h in header] != ["vertex_id", "value"]:
            raise InvalidArgumentError(f"unexpected header {header}")
        rows = [(int(a), float(b)) for a, b in rd]
    ids = np.array([r[0] for r in rows])
    if not np.array_equal(ids, np.arange(len(rows))):
        raise InvalidArgumentError("vertex ids must run 0..V-1 in order")
    out = np.array([r[1] for r in rows])
    if n_vertices is not None and len(out) != n_vertices:
        raise InvalidArgumentError(f"expected {n_vertices} values, found {len(out)}")
    if not np.all(np.isfinite(out)):
        raise InvalidArgumentError("vertex field has non-finite entries")
    return out
