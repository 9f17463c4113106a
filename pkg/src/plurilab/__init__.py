"""plurilab: determinantal Gibbs ensembles, Fekete points, equilibrium measures and their tropical limits."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .polybasis import Configuration, MultiIndexBasis, basis_size, log_abs_det2
from .weights import BaseMeasure, Weight, admissibility_check
from .energy import EnsembleModel, weighted_hamiltonian, green_formula_estimate
from .sampler import Carrier, Schedule, fekete_search, run_chain
from .equilibrium import preset_equilibrium, solve_cy_radial, solve_mfe_radial, temperature_sweep
from .bergman import christoffel, dpp_sample, gram_factorization
from .tropical import ConvexBody, r_invariant, solve_real_ma_1d, tropical_gibbs
from .transport import DiscreteMeasure, monotone_map_1d, ot_cost
from .diagnostics import partition_bruteforce, relative_entropy, wasserstein1
from .curieweiss import cw_finite_n, cw_free_energy, cw_magnetization
