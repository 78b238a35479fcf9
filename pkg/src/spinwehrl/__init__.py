"""Wehrl entropy, Husimi norms and their extremals for spin-j coherent states.

States of spin j are polynomials of degree <= 2j in the stereographic
coordinate z; see :mod:`spinwehrl.states`.  Integrals over the sphere go
through the product rules of :mod:`spinwehrl.sphere`.
"""

from .carlen import (CarlenCheck, carlen_epsilon_error, carlen_residual, gradient_density,
                     regularized_terms, step1_ratio_check, variational_functional,
                     variational_ratio)
from .entropy import (EntropyReport, ExponentPair, bound_gap, entropy_report, lieb_bound,
                      mixed_wehrl, norm_log_derivative_check, norm_profile, normalized_p_norm,
                      plain_p_norm, renyi_wehrl, theorem2_bound, wehrl_entropy)
from .errors import IntegrationFailure, InvalidArgumentError, NumericDomainError, PreconditionError
from .radial import (OdeProblem, RadialSolution, boundary_scan, coherent_profile, el_residual,
                     energy_diagnostic, problem_from_exponents, shoot)
from .search import (ScanReport, SearchOptions, SearchResult, maximize_norm_ratio,
                     minimize_wehrl, monotonicity_scan, random_state)
from .sphere import (QuadratureRule, SpherePoint, adapt_rule, build_quadrature, chordal_distance,
                     default_rule, integrate_invariant)
from .states import (MixedState, SpinState, SU2Element, apply_su2, coherent_state, evaluate,
                     husimi, inner_product, kernel, majorana_roots, make_state,
                     rotate_root_to_infinity, state_from_roots)

__version__ = "0.1.0"
