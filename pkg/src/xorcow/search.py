"""Minimum-SNR search, phase-split optimisation and the frequency-hopping baseline."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

from .analytic import PhaseSplit, Schedule, occupycow2_failure_prob, xorcow_failure_prob
from .channel import SystemParams, any_fail, db_to_linear, link_failure_prob
from .report import SweepRow

Evaluator = Callable[[float], float]

DEFAULT_LO_DB = -10.0
DEFAULT_HI_DB = 60.0
DEFAULT_RESOLUTION_DB = 0.01
DEFAULT_K_MAX = 64

SWEEP_SCHEMES = ("xorcow-fixed", "xorcow-flexible", "xorcow-fixed-opt", "xorcow-flexible-opt",
                 "freqhop", "occupycow2")


class BracketError(ValueError):
    """The target is not crossed inside the SNR bracket."""

    def __init__(self, target, lo_db, f_lo, hi_db, f_hi):
        self.target, self.lo_db, self.f_lo, self.hi_db, self.f_hi = target, lo_db, f_lo, hi_db, f_hi
        super().__init__(
            f"target {target:.10g} not bracketed: f({lo_db:.10g} dB) = {f_lo:.10g}, "
            f"f({hi_db:.10g} dB) = {f_hi:.10g}")


@dataclass(frozen=True)
class MinSnrResult:
    snr_db: float
    achieved_pfail: float
    iterations: int


def _evaluate(evaluator, snr_db):
    value = float(evaluator(db_to_linear(snr_db)))
    if math.isnan(value):
        raise ValueError(f"evaluator returned NaN at {snr_db:.10g} dB")
    return value


def min_snr(target: float, evaluator: Evaluator, lo_db: float = DEFAULT_LO_DB,
            hi_db: float = DEFAULT_HI_DB, resolution_db: float = DEFAULT_RESOLUTION_DB) -> MinSnrResult:
    """Smallest SNR (dB, to ``resolution_db``) at which ``evaluator`` meets ``target``.

    ``evaluator`` takes a linear SNR and must be nonincreasing in it. The
    bisection keeps ``f(hi) <= target < f(lo)`` and returns ``hi``.
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target must lie in [0, 1], got {target!r}")
    if not (lo_db < hi_db and resolution_db > 0):
        raise ValueError("need lo_db < hi_db and resolution_db > 0")
    f_lo = _evaluate(evaluator, lo_db)
    f_hi = _evaluate(evaluator, hi_db)
    if not (f_hi <= target < f_lo):
        raise BracketError(target, lo_db, f_lo, hi_db, f_hi)
    iterations = 0
    while hi_db - lo_db > resolution_db:
        mid = 0.5 * (lo_db + hi_db)
        f_mid = _evaluate(evaluator, mid)
        if f_mid <= target:
            hi_db, f_hi = mid, f_mid
        else:
            lo_db = mid
        iterations += 1
    return MinSnrResult(hi_db, f_hi, iterations)


def xorcow_evaluator(params: SystemParams, split: PhaseSplit | None = None,
                     schedule: Schedule = "fixed") -> Evaluator:
    return lambda snr: xorcow_failure_prob(replace(params, snr=snr), split, schedule)


def occupycow2_evaluator(params: SystemParams) -> Evaluator:
    return lambda snr: occupycow2_failure_prob(replace(params, snr=snr))


@dataclass(frozen=True)
class FreqHopParams:
    """``k`` sub-channels of ``W / k``; each message is repeated on all of them."""

    k: int
    k_max: int = DEFAULT_K_MAX

    def __post_init__(self):
        if not 1 <= self.k <= self.k_max:
            raise ValueError(f"need 1 <= k <= {self.k_max}, got {self.k}")

    def sub_bandwidth(self, params: SystemParams):
        return params.bandwidth_W / self.k

    @staticmethod
    def hop_rate(params: SystemParams):
        return 2 * params.n * params.m_bits / params.cycle_T


def freqhop_failure_prob(params: SystemParams, k: int) -> float:
    """Cycle failure of round-robin TDMA with ``k``-fold frequency diversity.

    Each of the ``2n`` messages gets ``T / (2n)`` of airtime, split over
    ``k`` parallel sub-channels of width ``W / k`` that all carry a copy.
    A message is lost only if every copy is.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    hop = FreqHopParams(k, max(k, DEFAULT_K_MAX))
    p_hop = link_failure_prob(hop.hop_rate(params), hop.sub_bandwidth(params), params.snr)
    return any_fail(2 * params.n, p_hop ** k)


class FreqHopChoice(NamedTuple):
    k: int
    snr_db: float


def optimize_freqhop_k(params: SystemParams, target: float, k_max: int = DEFAULT_K_MAX,
                       lo_db: float = DEFAULT_LO_DB, hi_db: float = DEFAULT_HI_DB,
                       resolution_db: float = DEFAULT_RESOLUTION_DB) -> FreqHopChoice:
    """Scan ``k = 1..k_max``; the smallest ``k`` wins ties."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    best = None
    last_error = None
    for k in range(1, k_max + 1):
        ev = lambda snr, k=k: freqhop_failure_prob(replace(params, snr=snr), k)
        try:
            res = min_snr(target, ev, lo_db, hi_db, resolution_db)
        except BracketError as exc:
            last_error = exc
            continue
        if best is None or res.snr_db < best.snr_db:
            best = FreqHopChoice(k, res.snr_db)
    if best is None:
        raise last_error
    return best


class SplitChoice(NamedTuple):
    split: PhaseSplit
    snr_db: float


def simplex_grid(step=0.05):
    """Interior points of the phase simplex on a lattice of spacing ``step``."""
    N = round(1.0 / step)
    if not math.isclose(N * step, 1.0):
        raise ValueError(f"step must divide 1, got {step}")
    out = []
    for i in range(1, N - 1):
        for j in range(1, N - i):
            f_D, f_U = i / N, j / N
            out.append(PhaseSplit(f_D, f_U, 1.0 - f_D - f_U))
    return out


_TRANSFERS = [(i, j) for i in range(3) for j in range(3) if i != j]


def _shift(split: PhaseSplit, src, dst, step):
    fs = [split.f_D, split.f_U, split.f_X]
    fs[src] -= step
    fs[dst] += step
    if min(fs) <= 1e-9:
        return None
    # keep the sum exact by deriving the XOR share
    return PhaseSplit(fs[0], fs[1], 1.0 - fs[0] - fs[1])


def optimize_phase_split(params: SystemParams, target: float, schedule: Schedule = "fixed",
                         grid_step=0.05, min_step=0.005, lo_db: float = DEFAULT_LO_DB,
                         hi_db: float = DEFAULT_HI_DB,
                         resolution_db: float = DEFAULT_RESOLUTION_DB) -> SplitChoice:
    """Split minimising the required SNR, never worse than the equal split.

    Coarse lattice search, then coordinate moves of the form "shift ``step``
    from one phase to another" with ``step`` halved down to ``min_step``.
    A candidate whose failure at the incumbent SNR already exceeds
    ``target`` cannot win and is skipped without a bisection.
    """

    def solve(split):
        return min_snr(target, xorcow_evaluator(params, split, schedule), lo_db, hi_db,
                       resolution_db).snr_db

    best = PhaseSplit.equal()
    best_db = solve(best)

    def consider(split):
        nonlocal best, best_db
        if xorcow_failure_prob(replace(params, snr=db_to_linear(best_db)), split, schedule) > target:
            return False
        try:
            db = solve(split)
        except BracketError:
            return False
        if db < best_db:
            best, best_db = split, db
            return True
        return False

    for split in simplex_grid(grid_step):
        consider(split)

    step = grid_step / 2
    while step >= min_step:
        moved = True
        while moved:
            moved = False
            for src, dst in _TRANSFERS:
                cand = _shift(best, src, dst, step)
                if cand is not None and consider(cand):
                    moved = True
        step /= 2
    return SplitChoice(best, best_db)


def _split_aux(split: PhaseSplit):
    return f"{split.f_D:.10g};{split.f_U:.10g};{split.f_X:.10g}"


def _sweep_cell(scheme, params: SystemParams, target, k_max, bracket):
    try:
        if scheme in ("xorcow-fixed", "xorcow-flexible"):
            split = PhaseSplit.equal()
            res = min_snr(target, xorcow_evaluator(params, split, scheme.split("-")[1]), *bracket)
            return res.snr_db, _split_aux(split), "ok"
        if scheme in ("xorcow-fixed-opt", "xorcow-flexible-opt"):
            lo, hi, res_db = bracket
            choice = optimize_phase_split(params, target, scheme.split("-")[1], lo_db=lo, hi_db=hi,
                                          resolution_db=res_db)
            return choice.snr_db, _split_aux(choice.split), "ok"
        if scheme == "freqhop":
            choice = optimize_freqhop_k(params, target, k_max, *bracket)
            return choice.snr_db, str(choice.k), "ok"
        res = min_snr(target, occupycow2_evaluator(params), *bracket)
        return res.snr_db, "", "ok"
    except BracketError:
        return math.nan, "", "bracket-failure"


def sweep_network_size(n_values: Sequence[int], template: SystemParams, schemes: Sequence[str],
                       target: float, m_values: Sequence[int] | None = None,
                       k_max: int = DEFAULT_K_MAX, workers: int = 1, lo_db: float = DEFAULT_LO_DB,
                       hi_db: float = DEFAULT_HI_DB,
                       resolution_db: float = DEFAULT_RESOLUTION_DB) -> list[SweepRow]:
    """Minimum SNR per (m, scheme, n) cell; rows follow input order."""
    if not n_values or not schemes:
        raise ValueError("n_values and schemes must be nonempty")
    for s in schemes:
        if s not in SWEEP_SCHEMES:
            raise ValueError(f"unknown scheme {s!r}; choose from {SWEEP_SCHEMES}")
    m_values = list(m_values) if m_values else [template.m_bits]
    cells = [(s, m, n) for m in m_values for s in schemes for n in n_values]
    bracket = (lo_db, hi_db, resolution_db)

    def run(cell):
        s, m, n = cell
        snr_db, aux, status = _sweep_cell(s, replace(template, n=n, m_bits=m), target, k_max, bracket)
        return SweepRow(s, n, m, snr_db, aux, status)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, cells))
    return [run(c) for c in cells]
