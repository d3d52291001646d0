"""Closed triangle meshes: data type, validation, generators and OBJ I/O.

Meshes are either embedded (vertex positions in R^3) or intrinsic: the flat
torus carries, for every face, the unwrapped chart coordinates of its three
corners, so its metric is exactly flat and no embedding is needed.  All
geometric operators work from per-face local 2D coordinates, which both
kinds provide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import InvalidArgumentError, MeshValidationError, ResourceError

__all__ = [
    "TriangleMesh",
    "gen_icosphere",
    "gen_revolution_mesh",
    "gen_flat_torus",
    "graded_nodes",
    "read_obj",
    "write_obj",
]

MAX_SUBDIVISIONS = 7


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Closed, consistently oriented triangle mesh.

    Parameters
    ----------
    faces : (F, 3) int array
        Counter-clockwise vertex triples.
    vertices : (V, 3) float array or None
        Embedded positions.  ``None`` for intrinsic meshes.
    face_chart : (F, 3, 2) float array or None
        Corner coordinates of each face in a flat chart (intrinsic meshes).
    periodic_identification : dict or None
        For the flat torus: ``{"side_lengths": (Lx, Ly), "chart": (V, 2)}``;
        vertices on opposite sides of the fundamental square are glued.
    info : dict
        Generator metadata (kind, parameters, per-vertex meridian ``t`` ...).
    """

    faces: np.ndarray
    vertices: np.ndarray | None = None
    face_chart: np.ndarray | None = None
    periodic_identification: dict | None = None
    info: dict = field(default_factory=dict)
    n_vertices: int = None

    def __post_init__(self):
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshValidationError("faces must be an (F, 3) integer array")
        object.__setattr__(self, "faces", faces)
        if self.vertices is None and self.face_chart is None:
            raise MeshValidationError("need vertex positions or per-face chart coordinates")
        if self.vertices is not None:
            v = np.ascontiguousarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 3:
                raise MeshValidationError("vertices must be an (V, 3) array")
            object.__setattr__(self, "vertices", v)
            nv = len(v)
        else:
            nv = int(self.n_vertices if self.n_vertices is not None else faces.max() + 1)
        object.__setattr__(self, "n_vertices", nv)
        if faces.min() < 0 or faces.max() >= nv:
            raise MeshValidationError("face index out of range")
        for arr in (self.vertices, self.face_chart, self.faces):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "_cache", {})

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_intrinsic(self) -> bool:
        return self.vertices is None

    def local_coords(self) -> np.ndarray:
        """(F, 3, 2) corner coordinates in an orthonormal frame of each face."""
        if "local" not in self._cache:
            if self.face_chart is not None:
                xy = np.array(self.face_chart, dtype=float)
            else:
                p = self.vertices[self.faces]
                e1 = p[:, 1] - p[:, 0]
                e2 = p[:, 2] - p[:, 0]
                len1 = np.linalg.norm(e1, axis=1)
                x1 = e1 / len1[:, None]
                nrm = np.cross(e1, e2)
                y1 = np.cross(nrm, x1)
                y1 /= np.linalg.norm(y1, axis=1)[:, None]
                xy = np.zeros((self.n_faces, 3, 2))
                xy[:, 1, 0] = len1
                xy[:, 2, 0] = np.einsum("ij,ij->i", e2, x1)
                xy[:, 2, 1] = np.einsum("ij,ij->i", e2, y1)
            xy.setflags(write=False)
            self._cache["local"] = xy
        return self._cache["local"]

    def edge_lengths(self) -> np.ndarray:
        """(F, 3) lengths; column k is the edge opposite corner k."""
        if "lengths" not in self._cache:
            if self.vertices is not None:
                p = self.vertices[self.faces]
            else:
                p = self.face_chart
            L = np.stack([np.linalg.norm(p[:, (k + 2) % 3] - p[:, (k + 1) % 3], axis=1)
                          for k in range(3)], axis=1)
            L.setflags(write=False)
            self._cache["lengths"] = L
        return self._cache["lengths"]

    def face_areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            a, b, c = np.sort(self.edge_lengths(), axis=1)[:, ::-1].T
            # Kahan's cancellation-free Heron formula, a >= b >= c
            q = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
            A = 0.25 * np.sqrt(np.clip(q, 0.0, None))
            A.setflags(write=False)
            self._cache["areas"] = A
        return self._cache["areas"]

    def total_area(self) -> float:
        return float(np.sum(self.face_areas()))

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted (E, 2) pairs."""
        if "edges" not in self._cache:
            f = self.faces
            e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
            e = np.unique(np.sort(e, axis=1), axis=0)
            self._cache["edges"] = e
        return self._cache["edges"]

    def mean_edge_length(self) -> float:
        f = self.faces
        e = np.concatenate([f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]])
        L = self.edge_lengths().T.reshape(-1)
        key = np.sort(e, axis=1)
        _, first = np.unique(key, axis=0, return_index=True)
        return float(np.mean(L[first]))

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_faces

    # -- validation ------------------------------------------------------
    def validate(self) -> "TriangleMesh":
        """Check closedness, orientation, triangle inequality; return ``self``."""
        f = self.faces
        if np.any(f[:, 0] == f[:, 1]) or np.any(f[:, 1] == f[:, 2]) or np.any(f[:, 0] == f[:, 2]):
            raise MeshValidationError("face with repeated vertex")
        V = np.int64(self.n_vertices)
        directed = np.concatenate([f[:, 0] * V + f[:, 1], f[:, 1] * V + f[:, 2],
                                   f[:, 2] * V + f[:, 0]])
        uniq, counts = np.unique(directed, return_counts=True)
        if np.any(counts > 1):
            raise MeshValidationError(
                "inconsistent orientation or non-manifold edge: a directed edge repeats")
        reverse = (uniq % V) * V + uniq // V
        if not np.all(np.isin(reverse, uniq, assume_unique=True)):
            raise MeshValidationError("mesh has boundary: some edge has only one incident face")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[f.ravel()] = True
        if not used.all():
            raise MeshValidationError(f"{int((~used).sum())} unreferenced vertices")
        L = np.sort(self.edge_lengths(), axis=1)
        bad = np.flatnonzero(~(L[:, 0] + L[:, 1] > L[:, 2]))
        if len(bad):
            raise MeshValidationError(f"face {int(bad[0])} violates the strict triangle inequality")
        if self.face_chart is not None:
            xy = self.face_chart
            cross = ((xy[:, 1, 0] - xy[:, 0, 0]) * (xy[:, 2, 1] - xy[:, 0, 1])
                     - (xy[:, 1, 1] - xy[:, 0, 1]) * (xy[:, 2, 0] - xy[:, 0, 0]))
            if np.any(cross <= 0):
                raise MeshValidationError("chart triangles must be counter-clockwise")
        return self


# -- generators -----------------------------------------------------------

def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v / np.linalg.norm(v, axis=1)[:, None], f


def gen_icosphere(subdivisions: int) -> TriangleMesh:
    """Unit icosphere after ``subdivisions`` rounds of 1-to-4 midpoint splitting.

    Has ``10 * 4**n + 2`` vertices, all projected onto the unit sphere.
    """
    if not isinstance(subdivisions, (int, np.integer)) or subdivisions < 0:
        raise InvalidArgumentError("subdivisions must be a non-negative integer")
    if subdivisions > MAX_SUBDIVISIONS:
        raise ResourceError(f"subdivisions={subdivisions} exceeds the limit {MAX_SUBDIVISIONS}")
    v, f = _icosahedron()
    for _ in range(subdivisions):
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        key = np.sort(e, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.reshape(3, -1).T + len(v)
        mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
        v = np.vstack([v, mid / np.linalg.norm(mid, axis=1)[:, None]])
        a, b, c = f.T
        ab, bc, ca = inv.T
        f = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1)])
    mesh = TriangleMesh(f, v, info={"kind": "icosphere", "subdivisions": int(subdivisions)})
    return mesh.validate()


def gen_revolution_mesh(profile, n_t: int, n_theta: int) -> TriangleMesh:
    """Surface of revolution with ``n_t`` meridian intervals and ``n_theta`` sectors.

    Vertices sit on the exact surface at rings ``t_j = j T / n_t``; the
    poles are single vertices.  ``info["vertex_t"]`` stores each vertex's
    meridian coordinate.
    """
    if n_theta < 3:
        raise InvalidArgumentError(f"n_theta={n_theta} < 3")
    if n_t < 8:
        raise InvalidArgumentError(f"n_t={n_t} < 8")
    profile.check_embeddable()
    t = np.linspace(0.0, profile.T, n_t + 1)
    z = profile.height(t)
    z = 0.5 * z[-1] - z
    r = profile.psi(t)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    rings = t[1:-1]
    pos = [np.array([[0.0, 0.0, z[0]]])]
    for j in range(1, n_t):
        pos.append(np.stack([r[j] * np.cos(theta), r[j] * np.sin(theta),
                             np.full(n_theta, z[j])], axis=1))
    pos.append(np.array([[0.0, 0.0, z[-1]]]))
    V = np.vstack(pos)
    south = len(V) - 1

    def ring(j):
        return 1 + (j - 1) * n_theta + np.arange(n_theta)

    k = np.arange(n_theta)
    kp = (k + 1) % n_theta
    faces = [np.stack([np.zeros(n_theta, dtype=np.int64), ring(1)[k], ring(1)[kp]], 1)]
    for j in range(1, n_t - 1):
        a, b = ring(j), ring(j + 1)
        faces.append(np.stack([a[k], b[k], b[kp]], 1))
        faces.append(np.stack([a[k], b[kp], a[kp]], 1))
    last = ring(n_t - 1)
    faces.append(np.stack([last[k], np.full(n_theta, south), last[kp]], 1))
    F = np.concatenate(faces).astype(np.int64)
    # orient outward: positive enclosed volume
    p = V[F]
    vol = np.sum(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])))
    if vol < 0:
        F = F[:, [0, 2, 1]]
    vt = np.concatenate([[0.0], np.repeat(rings, n_theta), [profile.T]])
    info = {"kind": "revolution", "profile": profile, "n_t": int(n_t),
            "n_theta": int(n_theta), "vertex_t": vt}
    return TriangleMesh(F, V, info=info).validate()


def graded_nodes(side_length: float, n: int, centers, width: float,
                 strength: float) -> np.ndarray:
    """``n`` periodic nodes on ``[0, L)`` clustered smoothly around ``centers``.

    Nodes are equidistributed in the density
    ``1 + strength * sum_c exp(-((x - c) / width)^2)`` (periodised), so the
    spacing near a center is about ``1 + strength`` times finer than far
    away and neighbouring cells differ by a smooth factor.  The node set
    is symmetric about every center when the centers themselves are
    placed symmetrically.
    """
    L = float(side_length)
    if n < 4 or not L > 0 or not width > 0 or strength < 0:
        raise InvalidArgumentError("need n >= 4, L > 0, width > 0, strength >= 0")
    c = np.asarray(centers, dtype=float)

    def cumulative(x):
        x = np.asarray(x, dtype=float)
        out = x.copy()
        for ci in c:
            for k in (-1, 0, 1):
                a = (x - ci - k * L) / width
                b = (-ci - k * L) / width
                out += strength * width * 0.5 * np.sqrt(np.pi) * (erf(a) - erf(b))
        return out

    total = cumulative(L)
    targets = total * np.arange(n) / n
    # cumulative is strictly increasing; invert on a dense table then polish by Newton
    xs = np.linspace(0.0, L, 64 * n + 1)
    x = np.interp(targets, cumulative(xs), xs)
    for _ in range(30):
        dens = 1.0 + strength * sum(np.exp(-((x - ci - k * L) / width) ** 2)
                                    for ci in c for k in (-1, 0, 1))
        step = (cumulative(x) - targets) / dens
        x -= step
        if np.max(np.abs(step)) < 1e-15 * L:
            break
    x[0] = 0.0
    return x


def gen_flat_torus(side_length: float, n: int, n_y: int | None = None,
                   x_nodes=None) -> TriangleMesh:
    """Intrinsic flat torus ``[0, L)^2`` with ``n`` (by ``n_y``) grid cells.

    No embedding is built: each face stores its unwrapped chart corners, so
    all angle defects vanish and the total area is ``L^2``.  ``n_y`` allows
    an anisotropic grid for fields that vary along ``x`` only, and
    ``x_nodes`` (increasing, starting at 0, all below ``L``) replaces the
    uniform ``x`` spacing, e.g. by :func:`graded_nodes`.
    """
    L = float(side_length)
    if not L > 0:
        raise InvalidArgumentError("side_length must be positive")
    if x_nodes is not None:
        xn = np.asarray(x_nodes, dtype=float)
        if (xn.ndim != 1 or xn[0] != 0.0 or xn[-1] >= L or np.any(np.diff(xn) <= 0)):
            raise InvalidArgumentError("x_nodes must increase from 0 and stay below side_length")
        n = len(xn)
    n_y = n if n_y is None else n_y
    if n < 4 or n_y < 4:
        raise InvalidArgumentError(f"need n >= 4 cells per side, got {n} x {n_y}")
    if x_nodes is None:
        xn = L * np.arange(n) / n
    xe = np.append(xn, L)
    hy = L / n_y
    i, j = np.meshgrid(np.arange(n), np.arange(n_y), indexing="ij")
    i, j = i.ravel(), j.ravel()

    def vid(a, b):
        return (a % n) * n_y + (b % n_y)

    a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    F = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    x0, x1, y0 = xe[i], xe[i + 1], j * hy
    ca = np.stack([x0, y0], 1)
    cb = np.stack([x1, y0], 1)
    cc = np.stack([x1, y0 + hy], 1)
    cd = np.stack([x0, y0 + hy], 1)
    chart = np.concatenate([np.stack([ca, cb, cc], 1), np.stack([ca, cc, cd], 1)])
    vchart = np.stack([x0, y0], 1)
    ident = {"side_lengths": (L, L), "chart": vchart}
    info = {"kind": "flat_torus", "side_length": L, "n": int(n), "n_y": int(n_y),
            "graded": x_nodes is not None}
    return TriangleMesh(F, None, face_chart=chart, periodic_identification=ident,
                        info=info, n_vertices=n * n_y).validate()


# -- OBJ ------------------------------------------------------------------

def write_obj(path, mesh: TriangleMesh) -> None:
    """Write positions and faces of an embedded mesh (1-based OBJ indices)."""
    if mesh.vertices is None:
        raise InvalidArgumentError("OBJ export needs an embedded mesh")
    with open(path, "w", newline="\n") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.faces + 1:
            fh.write(f"f {a} {b} {c}\n")


def read_obj(path, validate: bool = True) -> TriangleMesh:
    """Read ``v`` and triangular ``f`` records; texture/normal indices are ignored."""
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshValidationError("only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    mesh = TriangleMesh(np.array(faces, dtype=np.int64), np.array(verts, dtype=float),
                        info={"kind": "obj"})
    return mesh.validate() if validate else mesh
