"""Axisymmetric reduction on surfaces of revolution.

A closed surface of revolution is described by a meridian arc length
``t in [0, T]`` and a radius profile ``psi(t)`` with ``psi(0) = psi(T) = 0``.
Axisymmetric fields ``u(t)`` see the Laplace-Beltrami operator as
``(psi u')' / psi`` and the area element as ``2 pi psi dt``, so steady
states, their Fourier-mode spectra and the second-variation identity for
``v = |u'|`` all reduce to one-dimensional, symmetric tridiagonal problems.

The discretisation is a finite-volume scheme on a uniform grid with exact
dual-cell weights ``w_i = int psi`` over ``[t_{i-1/2}, t_{i+1/2}]``.  The
pole cells reproduce the removable singularity
``u'' + (psi'/psi) u' -> 2 u''(0)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import interpolate, linalg, optimize, sparse
from scipy.integrate import simpson
from scipy.sparse.linalg import spsolve

from .errors import (
    AccuracyError,
    EmbeddabilityError,
    InvalidArgumentError,
    NonConvergenceError,
)
from .wells import DoubleWell

__all__ = [
    "ProfileCurve",
    "sphere_profile",
    "dumbbell_profile",
    "tabulated_profile",
    "profile_eval",
    "GeodesicParallel",
    "closed_geodesic_parallels",
    "AxisymmetricState",
    "solve_axisymmetric_steady",
    "solve_periodic_1d",
    "ModeSpectrum",
    "mode_spectrum",
    "IdentityCheck",
    "check_second_variation_identity",
    "axisymmetric_energy",
    "write_profile_csv",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ProfileCurve:
    """Radius profile of a closed surface of revolution.

    Use :func:`sphere_profile`, :func:`dumbbell_profile` or
    :func:`tabulated_profile` rather than the constructor.
    """

    kind: str
    T: float
    d: float | None = None
    _spline: interpolate.CubicSpline | None = field(default=None, repr=False, compare=False)

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return np.sin(t)
        if self.kind == "dumbbell":
            s = np.sin(t)
            return s * (1.0 - self.d * s * s)
        return self._spline(t)

    def dpsi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return np.cos(t)
        if self.kind == "dumbbell":
            s, c = np.sin(t), np.cos(t)
            return c * (1.0 - 3.0 * self.d * s * s)
        return self._spline(t, 1)

    def d2psi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return -np.sin(t)
        if self.kind == "dumbbell":
            s, c = np.sin(t), np.cos(t)
            return -s - self.d * (6.0 * s * c * c - 3.0 * s**3)
        return self._spline(t, 2)

    def d3psi(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sphere":
            return -np.cos(t)
        if self.kind == "dumbbell":
            s, c = np.sin(t), np.cos(t)
            return -c - self.d * (6.0 * c**3 - 21.0 * s * s * c)
        return self._spline(t, 3)

    def gauss_curvature(self, t):
        """``K = -psi''/psi``, continued to the poles by ``K = -psi'''/psi'``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.psi(t)
        K = np.empty_like(t)
        near = (t < 1e-6) | (t > self.T - 1e-6)
        K[~near] = -self.d2psi(t[~near]) / p[~near]
        K[near] = -self.d3psi(t[near]) / self.dpsi(t[near])
        return K

    def check_embeddable(self, n: int = 20001, tol: float = 1e-12) -> None:
        """Raise :class:`EmbeddabilityError` unless ``|psi'| <= 1`` on ``[0, T]``."""
        t = np.linspace(0.0, self.T, n)
        worst = float(np.max(np.abs(self.dpsi(t))))
        if worst > 1.0 + tol:
            raise EmbeddabilityError(
                f"|psi'| reaches {worst:.6g} > 1; no embedding as a surface of revolution")

    def height(self, t):
        """Axial coordinate ``z(t) = int_0^t sqrt(1 - psi'^2)``, by Gauss-Legendre panels."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        order = np.argsort(t)
        ts = t[order]
        edges = np.concatenate([[0.0], ts])
        z = np.empty_like(ts)
        acc = 0.0
        for i in range(len(ts)):
            a, b = edges[i], edges[i + 1]
            if b > a:
                nodes = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
                slope = np.sqrt(np.clip(1.0 - self.dpsi(nodes) ** 2, 0.0, None))
                acc += 0.5 * (b - a) * float(np.dot(_GL_W, slope))
            z[i] = acc
        out = np.empty_like(t)
        out[order] = z
        return out


def sphere_profile() -> ProfileCurve:
    """Unit sphere, ``psi = sin t`` on ``[0, pi]``."""
    return ProfileCurve("sphere", math.pi)


def dumbbell_profile(d: float) -> ProfileCurve:
    """Dumbbell ``psi = sin t (1 - d sin^2 t)`` on ``[0, pi]``, neck at ``t = pi/2``.

    The neck parallel is a closed geodesic with Gauss curvature
    ``-(3d - 1)/(1 - d)``, negative exactly when ``d > 1/3``.
    """
    if not (1.0 / 3.0 < d <= 2.0 / 3.0):
        raise InvalidArgumentError(f"dumbbell parameter d={d} outside (1/3, 2/3]")
    return ProfileCurve("dumbbell", math.pi, d=float(d))


def tabulated_profile(t, psi, tol: float = 1e-6) -> ProfileCurve:
    """Clamped cubic-spline profile through samples ``(t, psi)``.

    The samples must start at ``t = 0`` and close with ``psi = 0`` at both
    ends; the spline is clamped to ``psi'(0) = 1`` and ``psi'(T) = -1``.
    """
    t = np.asarray(t, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if t.ndim != 1 or t.shape != psi.shape or len(t) < 5:
        raise InvalidArgumentError("need matching 1D arrays of at least 5 samples")
    if abs(t[0]) > 0 or np.any(np.diff(t) <= 0):
        raise InvalidArgumentError("samples must start at 0 and increase strictly")
    if abs(psi[0]) > tol or abs(psi[-1]) > tol:
        raise InvalidArgumentError("profile must close (psi = 0) at both ends")
    if np.any(psi[1:-1] <= 0):
        raise InvalidArgumentError("profile must be positive in the interior")
    psi = psi.copy()
    psi[0] = psi[-1] = 0.0
    spl = interpolate.CubicSpline(t, psi, bc_type=((1, 1.0), (1, -1.0)))
    return ProfileCurve("tabulated", float(t[-1]), _spline=spl)


def profile_eval(profile: ProfileCurve, t: float):
    """Return ``(psi, psi', psi'', K)`` at ``t``."""
    if profile.kind == "dumbbell" and not (1.0 / 3.0 < profile.d <= 2.0 / 3.0):
        raise InvalidArgumentError(f"dumbbell parameter d={profile.d} outside (1/3, 2/3]")
    if not (0.0 <= t <= profile.T):
        raise InvalidArgumentError(f"t={t} outside [0, {profile.T}]")
    return (float(profile.psi(t)), float(profile.dpsi(t)), float(profile.d2psi(t)),
            float(profile.gauss_curvature(t)[0]))


class GeodesicParallel(NamedTuple):
    t: float
    length: float
    K: float


def closed_geodesic_parallels(profile: ProfileCurve, interval=None,
                              n_samples: int = 4096) -> list[GeodesicParallel]:
    """Parallels ``t = t*`` with ``psi'(t*) = 0``; by Clairaut these are geodesics.

    Roots are bracketed by sign changes of ``psi'`` on a sample grid over the
    open ``interval`` (default: the whole open meridian) and refined by
    bisection to ``1e-12``.
    """
    a, b = (0.0, profile.T) if interval is None else map(float, interval)
    a, b = max(a, 0.0), min(b, profile.T)
    if b <= a:
        return []
    ts = np.linspace(a, b, n_samples + 1)[1:-1]
    g = profile.dpsi(ts)
    roots = []
    for i in range(len(ts)):
        if g[i] == 0.0:
            roots.append(float(ts[i]))
        elif i + 1 < len(ts) and g[i] * g[i + 1] < 0.0:
            roots.append(optimize.bisect(lambda x: float(profile.dpsi(x)), ts[i], ts[i + 1],
                                         xtol=1e-12, rtol=4 * np.finfo(float).eps))
    out = []
    for r in roots:
        out.append(GeodesicParallel(r, 2.0 * math.pi * float(profile.psi(r)),
                                    float(profile.gauss_curvature(r)[0])))
    return out


class _Grid:
    """Uniform finite-volume grid on ``[0, T]`` with ``n`` intervals."""

    def __init__(self, profile: ProfileCurve, n: int):
        self.profile = profile
        self.n = n
        self.h = profile.T / n
        self.t = np.linspace(0.0, profile.T, n + 1)
        self.psi = profile.psi(self.t)
        self.psi[0] = self.psi[-1] = 0.0
        self.psi_mid = profile.psi(self.t[:-1] + 0.5 * self.h)
        lo = np.maximum(self.t - 0.5 * self.h, 0.0)
        hi = np.minimum(self.t + 0.5 * self.h, profile.T)
        nodes = 0.5 * (hi - lo)[:, None] * _GL_X[None, :] + 0.5 * (hi + lo)[:, None]
        self.w = 0.5 * (hi - lo) * (profile.psi(nodes) @ _GL_W)

    def stiffness_bands(self):
        """Diagonal and off-diagonal of the weak ``-(psi u')'`` operator."""
        c = self.psi_mid / self.h
        diag = np.zeros(self.n + 1)
        diag[:-1] += c
        diag[1:] += c
        return diag, -c

    def apply_stiffness(self, u):
        flux = self.psi_mid * np.diff(u) / self.h
        out = np.zeros_like(u)
        out[:-1] -= flux
        out[1:] += flux
        return out


@dataclass
class AxisymmetricState:
    """Axisymmetric steady state on a uniform meridian grid."""

    profile: ProfileCurve
    well: DoubleWell
    grid: np.ndarray
    u: np.ndarray
    epsilon: float
    residual_inf: float
    converged: bool
    residual_trace: list = field(default_factory=list)
    order: int = 2

    @property
    def n(self) -> int:
        return len(self.grid) - 1

    @property
    def is_constant(self) -> bool:
        return float(np.ptp(self.u)) <= 1e-12 * max(1.0, float(np.max(np.abs(self.u))))

    def derivative(self) -> np.ndarray:
        """Fourth-order ``u'`` using the even reflection of ``u`` across both poles."""
        return _d4(self.u, self.profile.T / self.n, parity=+1)

    def __call__(self, t):
        return np.interp(t, self.grid, self.u)


def _d4(y, h, parity):
    """Fourth-order centred derivative; ghost values reflect ``y`` with given parity."""
    ext = np.concatenate([parity * y[2:0:-1], y, parity * y[-2:-4:-1]])
    return (ext[:-4] - 8.0 * ext[1:-3] + 8.0 * ext[3:-1] - ext[4:]) / (12.0 * h)


def _initial_values(init, t, well):
    if init is None:
        return np.where(t < 0.5 * t[-1], well.alpha, well.beta).astype(float)
    if callable(init):
        return np.asarray(init(t), dtype=float) * np.ones_like(t)
    arr = np.asarray(init, dtype=float)
    if arr.ndim == 0:
        return np.full_like(t, float(arr))
    if arr.shape != t.shape:
        raise InvalidArgumentError(f"init has {arr.size} values, grid has {t.size}")
    return arr.copy()


def _newton(u, residual, jacobian, tol, max_iter):
    """Damped Newton with Armijo backtracking on ``|F|_2``.

    ``residual(u)`` returns ``(F, r)``: the residual whose Jacobian is
    ``jacobian(u)`` (sparse) and its pointwise form tested against ``tol``.
    """
    F, r = residual(u)
    trace = [float(np.max(np.abs(r)))]
    it = 0
    while trace[-1] > tol and it < max_iter:
        step = spsolve(jacobian(u).tocsc(), -F)
        merit = float(np.linalg.norm(F))
        lam = 1.0
        while True:
            trial = u + lam * step
            Ft, rt = residual(trial)
            if np.linalg.norm(Ft) < (1.0 - 1e-4 * lam) * merit or lam < 1e-4:
                break
            lam *= 0.5
        u, F, r = trial, Ft, rt
        trace.append(float(np.max(np.abs(r))))
        it += 1
        if it >= 8 and trace[-1] >= 0.999 * trace[-8]:
            break  # stagnated at the rounding floor
    return u, trace


def _collocation_matrices(g: _Grid):
    """Fourth-order ``d/dt`` and ``d^2/dt^2`` with even reflection at both poles."""
    n, h = g.n, g.h
    N = n + 1
    d1 = sparse.lil_matrix((N, N))
    d2 = sparse.lil_matrix((N, N))
    c1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    c2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    for i in range(N):
        for k, off in enumerate(range(-2, 3)):
            j = i + off
            if j < 0:
                j = -j
            elif j > n:
                j = 2 * n - j
            d1[i, j] += c1[k]
            d2[i, j] += c2[k]
    return d1.tocsr(), d2.tocsr()


def _laplacian4(g: _Grid):
    d1, d2 = _collocation_matrices(g)
    coef = np.zeros(g.n + 1)
    coef[1:-1] = g.profile.dpsi(g.t[1:-1]) / g.psi[1:-1]
    lap = d2 + sparse.diags(coef) @ d1
    # pole rows: u'' + (psi'/psi) u' -> 2 u''
    lap = lap.tolil()
    lap[0] = 2.0 * d2[0]
    lap[g.n] = 2.0 * d2[g.n]
    return lap.tocsr()


def solve_axisymmetric_steady(profile: ProfileCurve, well: DoubleWell, epsilon: float,
                              n: int = 1024, init=None, tol: float = 1e-10,
                              max_iter: int = 60, relax_time: float | None = None,
                              order: int = 2) -> AxisymmetricState:
    """Solve ``eps^2 (u'' + (psi'/psi) u') = W'(u)`` with regular poles.

    A short stabilised gradient-flow relaxation turns rough initial data
    (for instance a step) into a smooth transition layer; damped Newton
    then converges to ``|r|_inf <= tol`` where
    ``r = -eps Lap_h u + W'(u)/eps`` is the same pointwise residual as on
    meshes.

    ``order=2`` is the symmetric finite-volume scheme used by the mode
    spectra.  ``order=4`` instead collocates with five-point stencils
    (even reflection across the poles); the identity check needs it to get
    below ``1e-3`` on thin interfaces at moderate ``n``.

    Parameters
    ----------
    init : None, float, array or callable
        Initial values; ``None`` means the step ``alpha`` / ``beta`` about
        ``T/2``.
    relax_time : float, optional
        Flow time of the relaxation (default ``3 * epsilon``); 0 disables it.
    """
    if n < 128:
        raise InvalidArgumentError("need n >= 128 grid intervals")
    if epsilon <= 0 or epsilon < 4.0 * profile.T / n:
        raise InvalidArgumentError(
            f"epsilon={epsilon} under-resolved: need epsilon >= 4 T/n = {4 * profile.T / n:.4g}")
    g = _Grid(profile, n)
    u = _initial_values(init, g.t, well)
    diag, off = g.stiffness_bands()

    if order == 2:
        def residual(v):
            F = epsilon * g.apply_stiffness(v) + g.w * well.dW(v) / epsilon
            return F, F / g.w

        def jac(v):
            return sparse.diags([epsilon * off, epsilon * diag + g.w * well.d2W(v) / epsilon,
                                 epsilon * off], [-1, 0, 1])
    elif order == 4:
        lap4 = _laplacian4(g)

        def residual(v):
            r = -epsilon * (lap4 @ v) + well.dW(v) / epsilon
            return r, r

        def jac(v):
            return -epsilon * lap4 + sparse.diags(well.d2W(v) / epsilon)
    else:
        raise InvalidArgumentError("order must be 2 or 4")

    relax_time = 3.0 * epsilon if relax_time is None else relax_time
    if relax_time > 0 and np.ptp(u) > 0:
        dt = epsilon / 20.0
        kappa = well.max_curvature(well.alpha - 0.5, well.beta + 0.5)
        ab = np.zeros((3, n + 1))
        ab[0, 1:] = dt * epsilon * off
        ab[1] = g.w * (1.0 + dt * kappa / epsilon) + dt * epsilon * diag
        ab[2, :-1] = dt * epsilon * off
        for _ in range(int(round(relax_time / dt))):
            rhs = g.w * (u + dt / epsilon * (kappa * u - well.dW(u)))
            u = linalg.solve_banded((1, 1), ab, rhs)

    u, trace = _newton(u, residual, jac, tol, max_iter)
    converged = trace[-1] <= tol
    if not converged:
        raise NonConvergenceError(
            f"Newton stalled at |r|_inf = {trace[-1]:.3e} after {len(trace) - 1} iterations",
            residual_trace=trace)
    return AxisymmetricState(profile, well, g.t, u, float(epsilon), trace[-1], True, trace, order)


def solve_periodic_1d(well: DoubleWell, epsilon: float, length: float, n: int,
                      init=None, tol: float = 1e-10, max_iter: int = 60):
    """Periodic solution of ``eps^2 u'' = W'(u)`` on a circle of given length.

    Discretised with the standard three-point Laplacian on ``n`` equispaced
    nodes; returns ``(x, u, residual_trace)``.  Used to seed the
    one-dimensional critical points on a flat torus.
    """
    h = length / n
    x = np.arange(n) * h
    u = (np.sin(2 * np.pi * x / length) if init is None else
         np.asarray(init(x) if callable(init) else init, dtype=float)).astype(float)

    def lap(v):
        return (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / h**2

    def residual(v):
        r = -epsilon * lap(v) + well.dW(v) / epsilon
        return r, r

    D = sparse.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="lil")
    D[0, n - 1] = D[n - 1, 0] = 1.0
    D = D.tocsr() / h**2
    u, trace = _newton(u, residual, lambda v: -epsilon * D + sparse.diags(well.d2W(v) / epsilon),
                       tol, max_iter)
    if trace[-1] > tol:
        raise NonConvergenceError(f"periodic Newton stalled at {trace[-1]:.3e}", trace)
    return x, u, trace


def axisymmetric_energy(state: AxisymmetricState) -> float:
    """``E_eps`` of the rotated state, by the same finite-volume quadrature."""
    g = _Grid(state.profile, state.n)
    eps = state.epsilon
    grad = eps * 0.5 * float(np.sum(g.psi_mid * np.diff(state.u) ** 2) / g.h)
    pot = float(np.dot(g.w, state.well.W(state.u))) / eps
    return 2.0 * math.pi * (grad + pot)


@dataclass
class ModeSpectrum:
    """Smallest eigenvalues of the reduced second variation, per azimuthal mode."""

    eigenvalues: dict
    residuals: dict
    tau: float

    @property
    def mu_min(self) -> float:
        return min(float(v[0]) for v in self.eigenvalues.values())

    @property
    def classification(self) -> str:
        mu = self.mu_min
        if mu < -self.tau:
            return "unstable"
        if mu > self.tau:
            return "stable"
        return "degenerate"


def _mode_bands(g: _Grid, state: AxisymmetricState, m: int):
    eps = state.epsilon
    diag, off = g.stiffness_bands()
    diag = eps * diag + g.w * state.well.d2W(state.u) / eps
    off = eps * off
    w = g.w.copy()
    if m > 0:
        inner = slice(1, -1)
        diag = diag[inner] + eps * m * m * g.w[inner] / g.psi[inner] ** 2
        off = off[1:-1]
        w = w[inner]
    s = 1.0 / np.sqrt(w)
    return diag * s * s, off * s[:-1] * s[1:], s


def mode_spectrum(profile: ProfileCurve, state: AxisymmetricState, m_max: int = 4,
                  k: int = 3, tau: float = 1e-6) -> ModeSpectrum:
    """Smallest ``k`` eigenvalues of
    ``v -> -eps (v'' + (psi'/psi) v' - m^2 v/psi^2) + W''(u) v / eps``
    for ``m = 0..m_max``, in the ``psi``-weighted inner product.

    Modes ``m >= 1`` vanish at the poles.  The classification keys on the
    global minimum with the band ``tau``.
    """
    if m_max < 0 or k < 1:
        raise InvalidArgumentError("need m_max >= 0 and k >= 1")
    if not state.converged:
        raise InvalidArgumentError("state is not converged")
    g = _Grid(profile, state.n)
    eigs, res = {}, {}
    for m in range(m_max + 1):
        d, e, _ = _mode_bands(g, state, m)
        kk = min(k, len(d))
        mu, X = linalg.eigh_tridiagonal(d, e, select="i", select_range=(0, kk - 1))
        BX = d[:, None] * X
        BX[:-1] += e[:, None] * X[1:]
        BX[1:] += e[:, None] * X[:-1]
        norm_B = float(np.max(np.abs(d) + np.concatenate([np.abs(e), [0]])
                              + np.concatenate([[0], np.abs(e)])))
        r = np.linalg.norm(BX - X * mu, axis=0) / (norm_B * np.linalg.norm(X, axis=0))
        if np.any(r > 1e-8):
            raise AccuracyError(f"mode {m}: eigen-residual {r.max():.2e} > 1e-8", r)
        eigs[m] = mu
        res[m] = r
    return ModeSpectrum(eigs, res, tau)


@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    relative_gap: float
    epsilon: float
    degenerate: bool = False
    n: int = 0

    @property
    def witness_value(self) -> float:
        """Predicted ``Q(|grad u|)`` for the eps-scaled energy, ``-eps * rhs``."""
        return -self.epsilon * self.rhs


def check_second_variation_identity(profile: ProfileCurve, state: AxisymmetricState
                                    ) -> IdentityCheck:
    """Compare both sides of the second-variation identity for ``v = |u'|``.

    With ``f = -W'/eps^2`` (the steady equation divided by ``eps``)::

        lhs = int (Lap v - W''(u) v / eps^2) v dmu
            = -int [ v'^2 + W''(u) v^2 / eps^2 ] 2 pi psi dt
        rhs = int u'^2 ( (psi'/psi)^2 + K ) 2 pi psi dt

    where ``(psi'/psi)^2`` is ``|grad V|^2`` of the unit field ``V = e_t`` and
    ``K = -psi''/psi``.  The left side uses two derivatives of ``u`` and the
    right side one; both are integrated by composite Simpson.  A constant
    state gives ``0 = 0`` and is returned flagged ``degenerate``.
    """
    if state.is_constant:
        return IdentityCheck(0.0, 0.0, float("nan"), state.epsilon, degenerate=True, n=state.n)
    if state.n % 2:
        raise InvalidArgumentError("Simpson quadrature needs an even number of intervals")
    t, eps, h = state.grid, state.epsilon, profile.T / state.n
    du = state.derivative()
    sgn = np.sign(du[np.argmax(np.abs(du))])
    v = np.abs(du)
    # v is odd across each pole: reflect with sign flip, and use |u'| orientation
    dv = _d4(sgn * du, h, parity=-1) * np.where(sgn * du >= 0, 1.0, -1.0)
    psi = profile.psi(t)
    psi[0] = psi[-1] = 0.0
    W2 = state.well.d2W(state.u)
    lhs_int = -(dv**2 + W2 * v**2 / eps**2) * psi
    geo = np.zeros_like(t)
    inner = slice(1, -1)
    dp, d2p = profile.dpsi(t[inner]), profile.d2psi(t[inner])
    geo[inner] = du[inner] ** 2 * (dp**2 - psi[inner] * d2p) / psi[inner]
    lhs = 2.0 * math.pi * float(simpson(lhs_int, x=t))
    rhs = 2.0 * math.pi * float(simpson(geo, x=t))
    return IdentityCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), eps, n=state.n)


def write_profile_csv(path, profile: ProfileCurve, state: AxisymmetricState) -> None:
    """Write ``t, psi, K, u, du`` rows with a header line and LF endings."""
    du = state.derivative()
    K = profile.gauss_curvature(state.grid)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "psi", "K", "u", "du"])
        for row in zip(state.grid, profile.psi(state.grid), K, state.u, du):
            wr.writerow([repr(float(x)) for x in row])
