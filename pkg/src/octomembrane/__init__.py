"""Numerical laboratory for self-dual membrane flows in 3 and 7 dimensions."""
from .algebra import (BetaMatrices, Octonion, StructureConstants, build_beta_matrices,
                      build_structure_constants, g2_membership, octonion_multiply,
                      verify_identity_suite, x_tensor)
from .bracket import jacobi_residual, pair_brackets, poisson_bracket, surface_integral
from .flow import (DiagnosticsReport, FlowState, NullVectorPair, conserved_charge, diagnose, eom_residual,
                   evolve, gauss_residual, make_null_pair, selfdual_rhs,
                   seven_dim_conservation_residual)
from .fuzzy import MatrixConfiguration, fuzzy_map, matrix_bracket
from .nahm import ansatz_residual, diagonal_top_rhs, f_equation_residual, z_rhs
from .solutions import (StringSolutionSpec, TodaSolutionSpec, collapsing_sphere_eval, m_matrix,
                        string_momentum, string_solution_eval, toda_eval)
from .surface import FieldConfiguration, SurfaceField, SurfaceGrid
from .susy import SusyOperator, SusyReport, build_susy_operator, count_preserved_susy

__version__ = "0.1.0"
