"""Shuffled linear regression: solvers, cycle-type MGF, and benchmark harness."""

from .errors import (BudgetError, DimensionError, DomainError, InvalidArgumentError,
                     ShufregError, SingularDesignError)
from .estimators import (Estimate, NetSpec, least_squares_beta, residual_and_objective,
                         solve_alt_min, solve_brute_force, solve_exact_d1,
                         solve_net_search, sorted_match)
from .mc import (ExperimentGrid, GridCell, GridSummary, TrialRecord, estimate_transition,
                 run_grid, run_trial, summarize)
from .model import Instance, ModelConfig, generate, snr_of
from .perm import (CycleType, Permutation, count_with_fixed_points, cycle_type,
                   derangement_count, overlap, sample_derangement, sample_uniform)
from .theory import (MgfParams, MgfValue, PkqkWitness, ThresholdQuery,
                     chi_square_tail_bounds, mgf_closed_form, mgf_upper_bound,
                     net_cardinality_bound, pkqk_lower_bound_check, threshold_snr)

__version__ = "0.1.0"
