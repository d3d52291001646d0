"""Why a round sphere has no stable phase boundary.

Run with ``python demos/sphere_instability.py``.  The script builds the
equatorial critical point at eps = 0.25, looks at the bottom of its
Hessian spectrum, evaluates the |grad u| test direction, and finally lets
a handful of random starts flow downhill.
"""

import numpy as np

from surfphase import (SolverConfig, assemble_operators, check_second_variation_identity,
                       gen_icosphere, instability_witness, newton_polish, quartic_well,
                       smallest_eigenpairs, solve_axisymmetric_steady, solve_steady,
                       sphere_profile)

EPS = 0.25


def main():
    well = quartic_well()

    # The 1D reduction gives the equatorial state cheaply and accurately.
    prof = sphere_profile()
    state = solve_axisymmetric_steady(prof, well, EPS, n=2048, order=4,
                                      init=lambda t: np.sign(t - np.pi / 2))
    ident = check_second_variation_identity(prof, state)
    print(f"1D state: residual {state.residual_inf:.1e}, predicted Q(|grad u|) "
          f"= {ident.witness_value:.4f}")

    # Sample it onto an icosphere through t = arccos z and polish there.
    mesh = gen_icosphere(5)
    ops = assemble_operators(mesh)
    t = np.arccos(np.clip(mesh.vertices[:, 2], -1, 1))
    u, trace = newton_polish(mesh, ops, well, EPS, state(t))
    print(f"mesh state on {mesh.n_vertices} vertices: Newton residual {trace[-1]:.1e}")

    spec = smallest_eigenpairs(mesh, ops, well, EPS, u, k=4)
    print("smallest Hessian eigenvalues:", np.round(spec.eigenvalues, 5))
    print("  the negative one is the instability; the next ones are rotations of the sphere")

    wit = instability_witness(mesh, ops, well, EPS, u, tau=spec.tau)
    print(f"Q(|grad u|) on the mesh = {wit.Q:.4f}  -> {wit.classification}")

    # Random starts never settle on a nonconstant state.
    coarse = gen_icosphere(4)
    cops = assemble_operators(coarse)
    ends = []
    for seed in range(8):
        u0 = np.random.default_rng(seed).uniform(-1, 1, coarse.n_vertices)
        v, rep = solve_steady(coarse, cops, well, SolverConfig(EPS, dt=0.5, seed=seed), u0)
        ends.append(f"{np.mean(v):+.0f}")
    print("random starts end at the constants:", " ".join(ends))


if __name__ == "__main__":
    main()
