"""Second variation of the phase-field energy on meshes.

At a field ``u`` the Hessian of ``E_eps`` is the matrix pencil ``(A, M)``
with ``A = eps S + M diag(W''(u)) / eps``.  Its smallest eigenvalue decides
local stability: a negative ``mu_1`` exhibits a descent direction, so ``u``
is not a local minimiser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .errors import AccuracyError, InvalidArgumentError
from .mesh import TriangleMesh
from .operators import OperatorPair, face_gradient, write_vertex_field
from .wells import DoubleWell

__all__ = [
    "second_variation_matrix",
    "quad_form",
    "tolerance_band",
    "SpectrumReport",
    "smallest_eigenpairs",
    "Witness",
    "witness_field",
    "instability_witness",
]


def second_variation_matrix(ops: OperatorPair, well: DoubleWell, epsilon: float, u):
    """``A = eps S + M diag(W''(u)) / eps``, also the Newton Jacobian of the solver."""
    u = np.asarray(u, dtype=float)
    return (epsilon * ops.stiffness
            + sparse.diags(ops.mass_diag * well.d2W(u) / epsilon)).tocsr()


def quad_form(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell, epsilon: float,
              u, v) -> float:
    """``Q(v) = eps v^T S v + sum_i M_ii W''(u_i) v_i^2 / eps``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (ops.n,) or v.shape != (ops.n,):
        raise InvalidArgumentError("field length does not match the mesh")
    return float(epsilon * (v @ (ops.stiffness @ v))
                 + np.sum(ops.mass_diag * well.d2W(u) * v * v) / epsilon)


def tolerance_band(well: DoubleWell, epsilon: float, u) -> float:
    """``tau = 1e-6 * max W''(range of u) / eps``."""
    u = np.asarray(u, dtype=float)
    return 1e-6 * abs(well.max_curvature(float(u.min()), float(u.max()))) / epsilon


def _classify(mu1: float, tau: float) -> str:
    if mu1 < -tau:
        return "unstable"
    if mu1 > tau:
        return "stable"
    return "degenerate"


@dataclass(eq=False)
class SpectrumReport:
    """Smallest eigenpairs of ``(A, M)`` with M-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    tau: float

    @property
    def mu1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def classification(self) -> str:
        return _classify(self.mu1, self.tau)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "classification": self.classification,
            "tau": float(self.tau),
        }

    def write_json(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_eigenvector_csv(self, path, index: int = 0) -> None:
        write_vertex_field(path, self.eigenvectors[:, index])


def smallest_eigenpairs(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell,
                        epsilon: float, u, k: int = 4, seed: int = 0,
                        restarts: int = 3, tau: float | None = None) -> SpectrumReport:
    """Smallest ``k`` eigenpairs of the Hessian pencil by shift-invert Lanczos.

    The shift sits just below the lower bound ``min W''(u) / eps`` of the
    spectrum, so ``A - sigma M`` is positive definite and the eigenvalues
    nearest the shift are the smallest ones.  The start vector is drawn
    from ``numpy.random.default_rng(seed)``.  Each pair must satisfy the
    backward-error bound ``|A phi - mu M phi| <= 1e-8 |A|_1 |phi|``.
    """
    u = np.asarray(u, dtype=float)
    if k < 1:
        raise InvalidArgumentError("k must be at least 1")
    if u.shape != (ops.n,):
        raise InvalidArgumentError("field length does not match the mesh")
    A = second_variation_matrix(ops, well, epsilon, u)
    M = ops.mass
    lower = float(np.min(well.d2W(u))) / epsilon
    # close to the bound, so the low eigenvalues stay well separated after inversion
    sigma = lower - 1e-2 * (abs(lower) + 1.0)
    lu = splu((A - sigma * M).tocsc())
    op_inv = LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    rng = np.random.default_rng(seed)
    history = []
    ncv = min(ops.n, max(2 * k + 1, 20))
    for attempt in range(restarts + 1):
        v0 = rng.standard_normal(ops.n)
        try:
            mu, X = eigsh(A, k=k, M=M, sigma=sigma, which="LM", OPinv=op_inv,
                          v0=v0, ncv=ncv, tol=0.0, maxiter=20 * ops.n)
            break
        except ArpackNoConvergence as exc:
            history.append(f"attempt {attempt}: {len(exc.eigenvalues)} of {k} converged")
            ncv = min(ops.n, 2 * ncv)
    else:
        raise AccuracyError("shift-invert iteration did not converge", history)
    order = np.argsort(mu)
    mu, X = mu[order], X[:, order]
    # M-orthonormalise (clusters from continuous symmetries)
    G = X.T @ (M @ X)
    C = np.linalg.cholesky(0.5 * (G + G.T))
    X = np.linalg.solve(C, X.T).T
    normA = float(abs(A).sum(axis=0).max())
    R = A @ X - (M @ X) * mu
    res = np.linalg.norm(R, axis=0) / (normA * np.linalg.norm(X, axis=0))
    if np.any(res > 1e-8):
        raise AccuracyError(f"eigen-residual {res.max():.2e} exceeds 1e-8", list(res))
    # deterministic sign: largest-magnitude entry positive
    for j in range(X.shape[1]):
        if X[np.argmax(np.abs(X[:, j])), j] < 0:
            X[:, j] = -X[:, j]
    tau = tolerance_band(well, epsilon, u) if tau is None else tau
    return SpectrumReport(mu, X, res, tau)


@dataclass(eq=False)
class Witness:
    field: np.ndarray
    Q: float
    norm2: float
    tau: float
    classification: str


def witness_field(mesh: TriangleMesh, u) -> np.ndarray:
    """Vertex field ``|grad u|`` by area-weighted averaging of face values."""
    g = np.linalg.norm(face_gradient(mesh, u), axis=1)
    A = mesh.face_areas()
    num = np.bincount(mesh.faces.ravel(), weights=np.repeat(A * g, 3), minlength=mesh.n_vertices)
    den = np.bincount(mesh.faces.ravel(), weights=np.repeat(A, 3), minlength=mesh.n_vertices)
    return num / den


def instability_witness(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell,
                        epsilon: float, u, tau: float | None = None) -> Witness:
    """Evaluate ``Q`` on the test field ``v = |grad u|``.

    For a critical point on a surface of non-negative curvature the smooth
    analogue of ``Q(v)`` is ``-eps int |grad u|^2 (|grad V|^2 + K)``, which
    is negative unless both terms vanish.  A value below ``-tau |v|_M^2``
    certifies instability; anything else is inconclusive.  Constant ``u``
    gives ``v = 0`` and the classification ``degenerate``.
    """
    u = np.asarray(u, dtype=float)
    tau = tolerance_band(well, epsilon, u) if tau is None else tau
    if np.ptp(u) == 0.0:
        return Witness(np.zeros_like(u), 0.0, 0.0, tau, "degenerate")
    v = witness_field(mesh, u)
    Q = quad_form(mesh, ops, well, epsilon, u, v)
    norm2 = float(np.sum(ops.mass_diag * v * v))
    label = "certifies-instability" if Q < -tau * norm2 else "inconclusive"
    return Witness(v, Q, norm2, tau, label)
