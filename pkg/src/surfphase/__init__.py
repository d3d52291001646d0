"""Phase-field energies on closed surfaces: meshes, solvers and stability tests."""

from .errors import *  # noqa: F401,F403
from .mesh import (TriangleMesh, gen_flat_torus, gen_icosphere, gen_revolution_mesh,
                   graded_nodes, read_obj, write_obj)
from .operators import (CurvatureField, IsoContour, OperatorPair, assemble_operators,
                        face_gradient, gauss_curvature, level_set_length, read_vertex_field,
                        write_vertex_field)
from .revolution import (AxisymmetricState, ModeSpectrum, ProfileCurve,
                         check_second_variation_identity, closed_geodesic_parallels,
                         dumbbell_profile, mode_spectrum, profile_eval,
                         solve_axisymmetric_steady, sphere_profile, tabulated_profile)
from .solver import (SolveReport, SolverConfig, el_residual, energy, gradient_flow_step,
                     newton_polish, norms, solve_steady)
from .stability import (SpectrumReport, instability_witness, quad_form,
                        smallest_eigenpairs, witness_field)
from .wells import DoubleWell, polynomial_well, quartic_well, surface_tension

__version__ = "0.1.0"
