"""Structural tests, entropy-rate bounds and convergence checks for finite HMMs."""

from .core import (
    EdgeEmittingHmm,
    StateEmittingHmm,
    Topology,
    delta,
    forward,
    irreducible,
    next_symbol_distribution,
    period,
    phi,
    stationary_distribution,
    support_graph,
    validate,
    word_probability,
)
from .convert import check_delta_equivalence, check_output_equivalence, edge_to_state, state_to_edge
from .structure import (
    construct_flag_word,
    flag_symbols,
    incompatible_pairs,
    is_flag_word,
    merge_word,
    path_mergeable_pairs,
)
from .blocks import block_model, check_block_consistency, minimal_flag_block
from .entropy import entropy_interval, fit_convergence_rate, h_estimates, unifilar_exact_entropy
from .bounds import (
    bound_constants,
    channel_contraction_check,
    check_lemma_gt,
    check_lemma_tv,
    check_theorem_bound,
    choose_flags,
    entropy_diff_check,
    gt_report,
    theorem_rate_summary,
    tv_distance,
)
from .census import census, random_hmm, random_topology

__version__ = "0.1.0"
