"""Double-well potentials and the interfacial surface tension.

The energy minimised throughout the package is

    E_eps(u) = int  eps |grad u|^2 / 2 + W(u) / eps  dmu

with ``W >= 0`` vanishing exactly at the two wells ``alpha < beta``.  The
reaction term of the steady equation ``Lap u + f(u) = 0`` is ``f = -W'``
after rescaling by ``eps**-2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import AccuracyError, InvalidArgumentError

__all__ = [
    "DoubleWell",
    "quartic_well",
    "polynomial_well",
    "Heteroclinic",
    "surface_tension",
]


@dataclass(frozen=True)
class DoubleWell:
    """A non-negative potential with two nondegenerate zeros.

    Parameters
    ----------
    alpha, beta : float
        The wells, ``alpha < beta``.
    W, dW, d2W : callable
        Vectorised evaluators of the potential and its first two derivatives.
    kappa : float, optional
        Upper bound of ``W''`` on ``[alpha - 1, beta + 1]``.  Computed by
        dense sampling when omitted.
    """

    alpha: float
    beta: float
    W: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dW: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d2W: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kappa: float = None
    name: str = "custom"

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise InvalidArgumentError(
                f"wells must satisfy alpha < beta, got {self.alpha}, {self.beta}")
        w = np.asarray(self.W(np.array([self.alpha, self.beta])), dtype=float)
        if np.any(np.abs(w) > 1e-14):
            raise InvalidArgumentError("W must vanish at both wells")
        c = np.asarray(self.d2W(np.array([self.alpha, self.beta])), dtype=float)
        if np.any(c <= 0):
            raise InvalidArgumentError("wells must be nondegenerate (W'' > 0)")
        if self.kappa is None:
            object.__setattr__(
                self, "kappa", self.max_curvature(self.alpha - 1.0, self.beta + 1.0))

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    def max_curvature(self, lo: float, hi: float) -> float:
        """Supremum of ``W''`` over ``[lo, hi]`` (dense sampling plus endpoints)."""
        s = np.linspace(lo, hi, 4001)
        return float(np.max(self.d2W(s)))

    def scaled(self, c: float) -> "DoubleWell":
        """The well ``c * W`` (same zeros)."""
        if c <= 0:
            raise InvalidArgumentError("scale factor must be positive")
        W, dW, d2W = self.W, self.dW, self.d2W
        return DoubleWell(
            self.alpha, self.beta,
            lambda u: c * W(u), lambda u: c * dW(u), lambda u: c * d2W(u),
            kappa=c * self.kappa, name=f"{c:g}*{self.name}")


def polynomial_well(coeffs, alpha: float, beta: float, name: str = "polynomial") -> DoubleWell:
    """Double well from polynomial coefficients in increasing degree."""
    p = Polynomial(coeffs)
    dp, d2p = p.deriv(1), p.deriv(2)
    if p.degree() <= 2:
        raise InvalidArgumentError("growth condition needs degree > 2")
    return DoubleWell(float(alpha), float(beta), p, dp, d2p, name=name)


def quartic_well() -> DoubleWell:
    """``W(u) = (1 - u^2)^2 / 4`` with wells at -1 and 1."""
    return DoubleWell(
        -1.0, 1.0,
        lambda u: 0.25 * (1.0 - np.asarray(u) ** 2) ** 2,
        lambda u: np.asarray(u) ** 3 - np.asarray(u),
        lambda u: 3.0 * np.asarray(u) ** 2 - 1.0,
        name="quartic")


@dataclass(frozen=True)
class Heteroclinic:
    """Tabulated solution of ``u'' = W'(u)`` joining the wells, centred at the midpoint."""

    x: np.ndarray
    u: np.ndarray
    energy: float

    def __call__(self, x):
        return np.interp(x, self.x, self.u)


def _heteroclinic(well: DoubleWell, half_width: float = 12.0, n: int = 2401) -> Heteroclinic:
    def rhs(_, y):
        return [np.sqrt(max(2.0 * float(well.W(y[0])), 0.0))]

    x = np.linspace(0.0, half_width, n // 2 + 1)
    fwd = integrate.solve_ivp(rhs, (0.0, half_width), [well.midpoint], t_eval=x,
                              rtol=1e-11, atol=1e-13, method="DOP853")
    bwd = integrate.solve_ivp(lambda t, y: [-rhs(t, y)[0]], (0.0, half_width), [well.midpoint],
                              t_eval=x, rtol=1e-11, atol=1e-13, method="DOP853")
    xs = np.concatenate([-x[:0:-1], x])
    us = np.concatenate([bwd.y[0][:0:-1], fwd.y[0]])
    du = np.sqrt(np.maximum(2.0 * well.W(us), 0.0))
    # equipartition: u'^2/2 = W on the heteroclinic
    energy = float(integrate.simpson(0.5 * du**2 + well.W(us), x=xs))
    return Heteroclinic(xs, us, energy)


def surface_tension(well: DoubleWell, return_profile: bool = False):
    """Interfacial energy per unit length, ``sigma = int_alpha^beta sqrt(2 W(s)) ds``.

    For the quartic well this is ``2 sqrt(2) / 3``.  With
    ``return_profile=True`` the 1D heteroclinic is returned as well; its
    energy ``int u'^2/2 + W`` reproduces ``sigma`` up to the truncation of
    the tabulated line.
    """
    val, err = integrate.quad(lambda s: np.sqrt(max(2.0 * float(well.W(s)), 0.0)),
                              well.alpha, well.beta, epsabs=1e-13, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or err > 1e-10:
        raise AccuracyError(f"surface tension quadrature error estimate {err:.2e} exceeds 1e-10")
    if return_profile:
        return val, _heteroclinic(well)
    return val
