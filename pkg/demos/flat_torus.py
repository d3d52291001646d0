"""The flat torus: the |grad u| direction is neutral, yet the kink pair is a saddle.

Run with ``python demos/flat_torus.py``.  A pair of straight interfaces
x = 0 and x = 1/2 on the unit flat torus is a critical point for
eps < 1/(2 pi).  With zero curvature, the test direction v = |grad u| has
second variation zero in the continuum; on a graded mesh the discrete
value lands inside the tolerance band.  The lowest Hessian eigenvalue
is nevertheless clearly negative.  u' changes sign twice along x, so the
translation mode u' is not the ground state.
"""

import numpy as np

from surfphase import (assemble_operators, gen_flat_torus, graded_nodes, instability_witness,
                       newton_polish, quartic_well, smallest_eigenpairs)
from surfphase.revolution import solve_periodic_1d

EPS = 0.08


def main():
    well = quartic_well()

    # 1D check first: the lowest eigenvalue of -eps u'' + W''(u)/eps.
    for n in (512, 1024):
        x, u1, _ = solve_periodic_1d(well, EPS, 1.0, n)
        h = 1.0 / n
        lap = (np.diag(-2 * np.ones(n)) + np.diag(np.ones(n - 1), 1)
               + np.diag(np.ones(n - 1), -1))
        lap[0, -1] = lap[-1, 0] = 1
        A = -EPS * lap / h**2 + np.diag(well.d2W(u1)) / EPS
        print(f"1D, n = {n}: lowest eigenvalues {np.round(np.linalg.eigvalsh(A)[:2], 5)}")

    xn = graded_nodes(1.0, 8192, [0.25, 0.75], 0.005, 300.0)
    mesh = gen_flat_torus(1.0, 8192, 17, x_nodes=xn)
    ops = assemble_operators(mesh)
    x = mesh.periodic_identification["chart"][:, 0]
    s = np.sin(2 * np.pi * x) / (2 * np.pi)
    u, trace = newton_polish(mesh, ops, well, EPS, np.tanh(s / (np.sqrt(2) * EPS)))
    print(f"\nmesh: {mesh.n_vertices} vertices, Newton residual {trace[-1]:.1e}")

    spec = smallest_eigenpairs(mesh, ops, well, EPS, u, k=3)
    print("lowest eigenvalues:", np.round(spec.eigenvalues, 6))
    wit = instability_witness(mesh, ops, well, EPS, u, tau=spec.tau)
    band = wit.tau * wit.norm2
    print(f"Q(|grad u|) = {wit.Q:.2e}, band {band:.2e}: "
          f"{'inside' if abs(wit.Q) <= band else 'outside'}")


if __name__ == "__main__":
    main()
