"""Energy, Euler-Lagrange residual and steady-state solves on meshes."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import InvalidArgumentError, NumericalError, OverflowFieldError
from .mesh import TriangleMesh
from .operators import OperatorPair
from .stability import second_variation_matrix
from .wells import DoubleWell

__all__ = [
    "SolverConfig",
    "SolveReport",
    "energy",
    "el_residual",
    "gradient_flow_step",
    "FlowStepper",
    "newton_polish",
    "solve_steady",
    "norms",
]

logger = logging.getLogger(__name__)

SCHEMES = ("stabilized-semi-implicit", "newton-polish")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of a steady-state solve.

    ``kappa=None`` selects ``sup W''`` over ``[alpha - 0.5, beta + 0.5]``.
    A run that stalls on an energy plateau (relative decrease below
    ``plateau_rtol`` over ``plateau_window`` steps) gets a seeded
    perturbation of amplitude ``noise``.
    """

    epsilon: float
    dt: float = 0.05
    tol_residual: float = 1e-6
    max_steps: int = 20000
    seed: int = 0
    scheme: str = "newton-polish"
    polish_tol: float = 1e-10
    kappa: float | None = None
    plateau_window: int = 200
    plateau_rtol: float = 1e-9
    noise: float = 1e-6

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be positive")
        if not self.tol_residual > 0:
            raise InvalidArgumentError("tol_residual must be positive")
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"scheme must be one of {SCHEMES}")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")

    def check_resolution(self, mesh: TriangleMesh) -> bool:
        """Warn (and return False) when ``epsilon < 2 * mean edge length``."""
        h = mesh.mean_edge_length()
        if self.epsilon < 2.0 * h:
            warnings.warn(f"epsilon={self.epsilon} is below 2 * mean edge length = {2 * h:.4g}",
                          RuntimeWarning, stacklevel=2)
            return False
        return True


@dataclass
class SolveReport:
    steps: int = 0
    termination: str = "max-steps"
    energy_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    kappa: float = float("nan")
    perturbations: int = 0
    polished: bool = False

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "termination": self.termination,
            "energy_trace": [float(x) for x in self.energy_trace],
            "residual_trace": [float(x) for x in self.residual_trace],
        }

    def write_json(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check(ops, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.n,):
        raise InvalidArgumentError(f"field has shape {u.shape}, operators have size {ops.n}")
    return u


def energy(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell, epsilon: float, u) -> float:
    """``E_eps(u) = (eps/2) u^T S u + sum_i M_ii W(u_i) / eps``."""
    u = _check(ops, u)
    pot = ops.mass_diag * well.W(u)
    bad = np.flatnonzero(~np.isfinite(pot) | ~np.isfinite(u))
    if len(bad):
        raise OverflowFieldError(f"non-finite energy density at vertex {int(bad[0])}",
                                 vertex=int(bad[0]))
    val = 0.5 * epsilon * ops.dirichlet(u) + float(np.sum(pot)) / epsilon
    if not np.isfinite(val):
        raise OverflowFieldError("energy overflowed", vertex=int(np.argmax(np.abs(u))))
    return val


def el_residual(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell, epsilon: float, u):
    """``r = M^-1 (eps S u) + W'(u) / eps``, the M-gradient of the energy."""
    u = _check(ops, u)
    return epsilon * ops.apply_stiffness(u) / ops.mass_diag + well.dW(u) / epsilon


class FlowStepper:
    """Stabilised semi-implicit gradient-flow steps with a cached factorisation.

    One step solves
    ``(M + dt eps S + dt kappa M / eps) u+ = M (u + dt (kappa u - W'(u)) / eps)``,
    which cannot increase the energy while ``kappa >= sup W''`` on the
    iterates.
    """

    def __init__(self, ops: OperatorPair, well: DoubleWell, epsilon: float, dt: float,
                 kappa: float | None = None):
        self.ops, self.well, self.epsilon, self.dt = ops, well, epsilon, dt
        self.kappa = (well.max_curvature(well.alpha - 0.5, well.beta + 0.5)
                      if kappa is None else float(kappa))
        self._factor()

    def _factor(self):
        ops, eps, dt = self.ops, self.epsilon, self.dt
        mat = (sparse.diags(ops.mass_diag * (1.0 + dt * self.kappa / eps))
               + dt * eps * ops.stiffness).tocsc()
        try:
            self._lu = splu(mat)
        except RuntimeError as exc:
            d = mat.diagonal()
            raise NumericalError(f"flow matrix factorisation failed: {exc}",
                                 condition=float(np.max(np.abs(d)) / np.min(np.abs(d)))) from exc

    def ensure_kappa(self, u) -> bool:
        """Raise ``kappa`` to cover the range of ``u``; return True if refactored."""
        w = self.well
        lo, hi = min(float(u.min()), w.alpha - 0.5), max(float(u.max()), w.beta + 0.5)
        need = w.max_curvature(lo, hi)
        if need > self.kappa:
            self.kappa = need
            self._factor()
            return True
        return False

    def step(self, u):
        ops, eps, dt = self.ops, self.epsilon, self.dt
        rhs = ops.mass_diag * (u + dt / eps * (self.kappa * u - self.well.dW(u)))
        out = self._lu.solve(rhs)
        if not np.all(np.isfinite(out)):
            raise NumericalError("flow step produced non-finite values")
        return out


def gradient_flow_step(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell,
                       config: SolverConfig, u, kappa: float | None = None):
    """One stabilised semi-implicit step of ``u_t = -r(u)``."""
    u = _check(ops, u)
    kappa = config.kappa if kappa is None else kappa
    return FlowStepper(ops, well, config.epsilon, config.dt, kappa).step(u)


def newton_polish(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell, epsilon: float,
                  u, tol: float = 1e-10, max_iter: int = 50):
    """Damped Newton on ``M r(u) = 0`` with the Hessian of the energy as Jacobian.

    Returns ``(u, residual_trace)``; the trace ends above ``tol`` when the
    iteration stagnated.
    """
    u = _check(ops, u).copy()
    M = ops.mass_diag

    def F(v):
        return epsilon * ops.apply_stiffness(v) + M * well.dW(v) / epsilon

    f = F(u)
    trace = [float(np.max(np.abs(f / M)))]
    for it in range(max_iter):
        if trace[-1] <= tol:
            break
        J = second_variation_matrix(ops, well, epsilon, u).tocsc()
        try:
            step = splu(J).solve(-f)
        except RuntimeError as exc:
            raise NumericalError(f"singular Newton system: {exc}") from exc
        merit = float(np.linalg.norm(f / np.sqrt(M)))
        lam = 1.0
        while True:
            trial = u + lam * step
            ft = F(trial)
            if np.linalg.norm(ft / np.sqrt(M)) < (1.0 - 1e-4 * lam) * merit or lam < 1e-3:
                break
            lam *= 0.5
        u, f = trial, ft
        trace.append(float(np.max(np.abs(f / M))))
        if it >= 8 and trace[-1] >= 0.999 * trace[-8]:
            break
    return u, trace


def solve_steady(mesh: TriangleMesh, ops: OperatorPair, well: DoubleWell,
                 config: SolverConfig, u0):
    """Gradient flow to ``|r|_inf <= tol_residual``, then optional Newton polish.

    Returns ``(u, report)``.  Running out of steps is reported through
    ``report.termination == "max-steps"``, not raised.
    """
    u = _check(ops, u0).copy()
    config.check_resolution(mesh)
    eps = config.epsilon
    rng = np.random.default_rng(config.seed)
    stepper = FlowStepper(ops, well, eps, config.dt, config.kappa)
    stepper.ensure_kappa(u)
    report = SolveReport(kappa=stepper.kappa)
    E = energy(mesh, ops, well, eps, u)
    r = float(np.max(np.abs(el_residual(mesh, ops, well, eps, u))))
    report.energy_trace.append(E)
    report.residual_trace.append(r)
    window_start = E
    since_window = 0
    while r > config.tol_residual and report.steps < config.max_steps:
        try:
            new = stepper.step(u)
        except NumericalError:
            report.termination = "diverged"
            return u, report
        if stepper.ensure_kappa(new):
            new = stepper.step(u)
        E_new = energy(mesh, ops, well, eps, new)
        if E_new > E + 1e-12 * max(1.0, abs(E)):
            # iterate left the kappa band between the two checks; tighten and redo
            stepper.kappa *= 2.0
            stepper._factor()
            continue
        u, E = new, E_new
        r = float(np.max(np.abs(el_residual(mesh, ops, well, eps, u))))
        report.steps += 1
        report.energy_trace.append(E)
        report.residual_trace.append(r)
        since_window += 1
        if since_window >= config.plateau_window:
            if window_start - E <= config.plateau_rtol * max(1.0, abs(E)) and r > config.tol_residual:
                u = u + config.noise * rng.standard_normal(len(u))
                E = energy(mesh, ops, well, eps, u)
                report.perturbations += 1
            window_start, since_window = E, 0
    report.kappa = stepper.kappa
    if r > config.tol_residual:
        report.termination = "max-steps"
        return u, report
    report.termination = "converged"
    if config.scheme == "newton-polish":
        u_pol, trace = newton_polish(mesh, ops, well, eps, u, tol=config.polish_tol)
        if trace[-1] < trace[0]:
            u = u_pol
            report.residual_trace.append(trace[-1])
            report.energy_trace.append(energy(mesh, ops, well, eps, u))
        report.polished = trace[-1] <= config.polish_tol
        if not report.polished:
            logger.warning("Newton polish stalled at %.3e", trace[-1])
    return u, report


def norms(mesh: TriangleMesh, ops: OperatorPair, u, u_ref):
    """``(L1, L2, H1)`` norms of ``u - u_ref`` in the lumped measure."""
    d = _check(ops, u) - _check(ops, u_ref)
    m = ops.mass_diag
    l1 = float(np.sum(m * np.abs(d)))
    l2sq = float(np.sum(m * d * d))
    h1sq = l2sq + float(d @ (ops.stiffness @ d))
    return l1, float(np.sqrt(l2sq)), float(np.sqrt(max(h1sq, 0.0)))
