"""Large-deviation toolkit for random walks in random environments on the
faces of the l1 unit ball: exact path-sum kernels, rate functions and their
convex duality, second-moment and collision bounds, and disorder phase scans.
"""

from .environment import (DisorderSpec, EnvironmentWindow, EtaLaw, JumpLaw,
                          disorder, imbalance, pair_moment, sample_window,
                          validate_eta_law)
from .errors import ConvergenceError, ResourceBudgetError, ValidationError
from .exact_kernel import (DnEstimate, DpResult, annealed_point_log_prob,
                           dn_derivative, dn_value, partition_function,
                           quenched_point_log_prob, second_moment_exact)
from .geometry import (BoundaryPoint, Face, admissible_counts, boundary_sites,
                       face_jump_set, project)
from .phase_scan import (EpsCEstimate, ScanResult, estimate_eps_c,
                         lipschitz_check, scan)
from .rate_functions import (FaceSummary, TiltResult, annealed_rate_boundary,
                             exposing_tilt, face_minimizer, finite_log_mgf,
                             grad_log_psi, hess_log_psi, lambda_mgf,
                             legendre_sup, log_psi, psi)
from .stochastics import (GreenResult, TiltedLaw, WalkResult, fourier_bound,
                          green_function, khasminskii_bound, simulate_walk,
                          tilted_law)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
