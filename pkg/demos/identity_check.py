"""Checking the second-variation identity on a reduced grid.

Run with ``python demos/identity_check.py``.  For an axisymmetric critical
point and v = |u'|, the left side needs two derivatives of u while the
right side is a curvature-weighted integral of u'^2.  Agreement improves
at the solve's own order as the grid is doubled.
"""

import numpy as np

from surfphase import (check_second_variation_identity, dumbbell_profile, quartic_well,
                       solve_axisymmetric_steady, sphere_profile)


def main():
    well = quartic_well()
    for name, prof, eps in (("sphere", sphere_profile(), 0.25),
                            ("dumbbell", dumbbell_profile(0.5), 0.1)):
        print(name)
        prev = None
        for n in (512, 1024, 2048):
            st = solve_axisymmetric_steady(prof, well, eps, n=n, order=4,
                                           init=lambda t: np.sign(t - np.pi / 2))
            chk = check_second_variation_identity(prof, st)
            rate = "" if prev is None else f"  order {np.log2(prev / chk.relative_gap):.2f}"
            print(f"  n = {n:5d}: lhs {chk.lhs:.8f}  rhs {chk.rhs:.8f}  "
                  f"gap {chk.relative_gap:.1e}{rate}")
            prev = chk.relative_gap


if __name__ == "__main__":
    main()
