"""Reliability analysis of XOR-CoW, a cooperative network-coded wireless protocol."""

from .analytic import (
    CaseId,
    PhaseSplit,
    RateTriple,
    SetCounts,
    dispatch_case,
    occupycow2_failure_prob,
    rates_for,
    success5_prob,
    success6_prob,
    two_hop_failure,
    xor_rates,
    xorcow_failure_prob,
)
from .channel import (
    ConditionalSet,
    SystemParams,
    any_fail,
    binom_pmf,
    conditional_set,
    db_to_linear,
    link_failure_prob,
    linear_to_db,
)
from .report import RunConfig, SweepRow, write_results
from .search import (
    BracketError,
    MinSnrResult,
    freqhop_failure_prob,
    min_snr,
    occupycow2_evaluator,
    optimize_freqhop_k,
    optimize_phase_split,
    sweep_network_size,
    xorcow_evaluator,
)
from .sim import (
    LinkRealization,
    brute_force_failure_prob,
    estimate_failure,
    run_occupycow2_cycle,
    run_xorcow_cycle,
    theorem_counterexamples,
)
from .topology import InfoTopology, Stream, build_xor_schedule, run_generic_cycle

__all__ = [name for name in dir() if not name.startswith("_")]
