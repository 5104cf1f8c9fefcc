"""Protocol semantics on link realizations.

Each cycle is executed on a capacity matrix: entry ``[i, j]`` is the
delay-limited capacity in bits/s of the reciprocal link between nodes ``i``
and ``j`` (index 0 is the controller). A transmission at rate ``R`` is
decoded iff capacity >= R, and with several simultaneous transmitters a
receiver succeeds iff any single transmitter link supports the rate.

All ``*_batch`` functions take a stack of capacity matrices of shape
``(trials, n+1, n+1)`` and are what the Monte Carlo estimator and the
enumeration oracle run. The scalar ``run_*`` wrappers take one
:class:`LinkRealization`.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analytic import PhaseSplit, Relays, Schedule, _check_relays, rates_for, xor_rates
from .channel import SystemParams, capacity, survival_at

CHUNK = 8192
SCHEMES = ("xorcow-fixed", "xorcow-flexible", "occupycow2", "generic")


@dataclass(frozen=True)
class LinkRealization:
    """Symmetric matrix of channel power gains; index 0 is the controller."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gains must be a square matrix")
        if np.any(g < 0) or not np.array_equal(g, g.T):
            raise ValueError("gains must be symmetric and non-negative")
        object.__setattr__(self, "gains", g)

    @property
    def n(self):
        return self.gains.shape[0] - 1

    def capacities(self, params: SystemParams):
        return capacity(self.gains, params.bandwidth_W, params.snr)


@dataclass
class CycleOutcome:
    dl_ok: np.ndarray
    ul_ok: np.ndarray
    failed: bool
    # occupycow2 only: [i, 0] direct, [i, j] via relay j
    dl_via: np.ndarray | None = field(default=None, repr=False)
    ul_via: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class McEstimate:
    trials: int
    failures: int

    @property
    def p_hat(self):
        return self.failures / self.trials

    @property
    def ci95_half_width(self):
        p = self.p_hat
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)


def sample_gains(n, trials, rng: np.random.Generator) -> np.ndarray:
    """``trials`` symmetric (n+1)x(n+1) matrices of i.i.d. Exp(1) gains."""
    iu = np.triu_indices(n + 1, k=1)
    g = np.zeros((trials, n + 1, n + 1))
    draws = rng.exponential(1.0, size=(trials, len(iu[0])))
    g[:, iu[0], iu[1]] = draws
    g[:, iu[1], iu[0]] = draws
    return g


def sample_realization(n, rng) -> LinkRealization:
    """One realization; ``rng`` is a Generator or an integer seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = chunk_rng(rng, 0)
    return LinkRealization(sample_gains(n, 1, rng)[0])


def _offdiag(mask):
    n = mask.shape[-1]
    return mask & ~np.eye(n, dtype=bool)


def xorcow_batch(cap, params: SystemParams, split: PhaseSplit, schedule: Schedule = "fixed",
                 relays: Relays = "strong"):
    """Execute XOR-CoW on each capacity matrix; returns (dl_ok, ul_ok) of shape (trials, n)."""
    _check_relays(relays)
    n = cap.shape[-1] - 1
    if n != params.n:
        raise ValueError(f"realization has {n} nodes, params expect {params.n}")
    rt = rates_for(params, split, schedule)
    c0 = cap[:, 0, 1:]
    cnn = cap[:, 1:, 1:]
    dl = c0 >= rt.R_D
    ul_direct = c0 >= rt.R_U
    strong = dl & ul_direct
    if schedule == "flexible":
        R_X = xor_rates(params, split, schedule)[strong.sum(axis=1)]
    else:
        R_X = np.full(cap.shape[0], rt.R_X)
    # heard[t, j, i]: node j overheard node i's uplink
    heard = _offdiag(cnn >= rt.R_U)
    pool = strong if relays == "strong" else dl
    relay = pool[:, :, None] & heard
    x_ctrl = c0 >= R_X[:, None]
    x_nn = cnn >= R_X[:, None, None]
    # every node outside the strong set owns a slot in both schedules; strong nodes are done already
    ul_ok = ul_direct | (dl & x_ctrl) | np.any(relay & x_ctrl[:, :, None], axis=1)
    dl_ok = dl | (ul_direct & x_ctrl) | np.any(relay & x_nn, axis=1)
    return dl_ok, ul_ok


def occupycow2_batch(cap, params: SystemParams, T_M: float, with_paths=False):
    """Two-hop Occupy CoW, every phase of length ``T_M`` at rate ``m n / T_M``."""
    n = cap.shape[-1] - 1
    R = params.m_bits * n / T_M
    c0 = cap[:, 0, 1:]
    link = _offdiag(cap[:, 1:, 1:] >= R)
    direct = c0 >= R
    # second downlink hop: controller and every first-hop decoder rebroadcast
    dl_relay = direct[:, :, None] & link
    # second uplink hop: every node that overheard the uplink repeats it
    ul_relay = link & direct[:, :, None]
    dl_ok = direct | np.any(dl_relay, axis=1)
    ul_ok = direct | np.any(ul_relay, axis=1)
    if not with_paths:
        return dl_ok, ul_ok
    t = cap.shape[0]
    dl_via = np.zeros((t, n, n + 1), dtype=bool)
    ul_via = np.zeros((t, n, n + 1), dtype=bool)
    dl_via[:, :, 0] = direct
    ul_via[:, :, 0] = direct
    dl_via[:, :, 1:] = (~direct)[:, :, None] & np.swapaxes(dl_relay, 1, 2)
    ul_via[:, :, 1:] = (~direct)[:, :, None] & np.swapaxes(ul_relay, 1, 2)
    return dl_ok, ul_ok, dl_via, ul_via


def _outcome(dl_ok, ul_ok, **extra):
    return CycleOutcome(dl_ok, ul_ok, not bool(np.all(dl_ok) and np.all(ul_ok)), **extra)


def run_xorcow_cycle(real: LinkRealization, params: SystemParams, split: PhaseSplit,
                     schedule: Schedule = "fixed", relays: Relays = "strong") -> CycleOutcome:
    cap = real.capacities(params)[None]
    dl, ul = xorcow_batch(cap, params, split, schedule, relays)
    return _outcome(dl[0], ul[0])


def run_occupycow2_cycle(real: LinkRealization, params: SystemParams, T_M: float) -> CycleOutcome:
    cap = real.capacities(params)[None]
    dl, ul, dv, uv = occupycow2_batch(cap, params, T_M, with_paths=True)
    return _outcome(dl[0], ul[0], dl_via=dv[0], ul_via=uv[0])


def common_path_violations(dl_ok, ul_ok, dl_via, ul_via):
    """Count succeeded cycles where some node's downlink and uplink helpers are disjoint."""
    ok = np.all(dl_ok & ul_ok, axis=1)
    shared = np.any(dl_via & ul_via, axis=2)
    return int(np.sum(ok & ~np.all(shared, axis=1)))


# ---------------------------------------------------------------------------
# Monte Carlo


def chunk_rng(seed, chunk):
    """Generator for trial chunk ``chunk``; depends on (seed, chunk) only."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _scheme_failures(cap, params, split, scheme, topology):
    if scheme == "xorcow-fixed":
        dl, ul = xorcow_batch(cap, params, split, "fixed")
    elif scheme == "xorcow-flexible":
        dl, ul = xorcow_batch(cap, params, split, "flexible")
    elif scheme == "occupycow2":
        dl, ul = occupycow2_batch(cap, params, params.cycle_T / 4)
    else:
        from .topology import generic_batch
        return ~generic_batch(cap, topology, params, split)
    return ~np.all(dl & ul, axis=1)


def estimate_failure(params: SystemParams, split: PhaseSplit | None, scheme: str, trials: int,
                     seed: int = 0, *, topology=None, workers: int = 1) -> McEstimate:
    """Monte Carlo estimate of the cycle-failure probability.

    Trials are drawn in fixed chunks of :data:`CHUNK` from per-chunk
    counter-based streams, so the estimate does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    if scheme == "generic" and topology is None:
        raise ValueError("generic scheme needs a topology")
    split = split or PhaseSplit.equal()
    n_nodes = params.n if scheme != "generic" else topology.size - 1

    def run(chunk):
        size = min(CHUNK, trials - chunk * CHUNK)
        g = sample_gains(n_nodes, size, chunk_rng(seed, chunk))
        cap = capacity(g, params.bandwidth_W, params.snr)
        return int(np.sum(_scheme_failures(cap, params, split, scheme, topology)))

    chunks = range(math.ceil(trials / CHUNK))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(pool.map(run, chunks))
    else:
        counts = [run(c) for c in chunks]
    return McEstimate(trials, sum(counts))


@dataclass(frozen=True)
class TheoremCheck:
    trials: int
    occupy_successes: int
    common_path_violations: int
    implication_violations: int

    @property
    def passed(self):
        return self.common_path_violations == 0 and self.implication_violations == 0


def theorem_counterexamples(params: SystemParams, trials: int, seed: int = 0) -> TheoremCheck:
    """Compare Occupy CoW (four phases of ``T_M``) with XOR-CoW (three) on shared fades.

    ``params.cycle_T`` is taken as ``4 T_M``. Counts succeeded Occupy cycles
    whose downlink and uplink of some node share no path, and realizations
    where Occupy CoW succeeds but XOR-CoW with cycle ``3 T_M`` and the equal
    fixed split fails.
    """
    T_M = params.cycle_T / 4
    x_params = replace(params, cycle_T=3 * T_M)
    split = PhaseSplit.equal()
    succ = cp = imp = 0
    for chunk in range(math.ceil(trials / CHUNK)):
        size = min(CHUNK, trials - chunk * CHUNK)
        cap = capacity(sample_gains(params.n, size, chunk_rng(seed, chunk)), params.bandwidth_W, params.snr)
        dl, ul, dv, uv = occupycow2_batch(cap, params, T_M, with_paths=True)
        occ_ok = np.all(dl & ul, axis=1)
        xdl, xul = xorcow_batch(cap, x_params, split, "fixed")
        succ += int(occ_ok.sum())
        cp += common_path_violations(dl, ul, dv, uv)
        imp += int(np.sum(occ_ok & ~np.all(xdl & xul, axis=1)))
    return TheoremCheck(trials, succ, cp, imp)


# ---------------------------------------------------------------------------
# exhaustive enumeration oracle


def _intervals(thresholds, bandwidth, snr):
    """Capacity intervals cut at ``thresholds``: (representative, probability) arrays."""
    t = sorted({float(x) for x in thresholds if x > 0})
    edges = [0.0] + t + [math.inf]
    reps, probs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        reps.append(0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * lo + 1.0)
        probs.append(survival_at(lo, bandwidth, snr) - survival_at(hi, bandwidth, snr))
    return np.array(reps), np.array(probs)


def brute_force_failure_prob(params: SystemParams, split: PhaseSplit | None = None,
                             schedule: Schedule = "fixed", relays: Relays = "strong",
                             condition=None) -> float:
    """Exact failure probability by enumerating quantised link states.

    Controller links are cut at every rate the cycle may use; node-to-node
    links are only ever compared with the uplink and XOR rates, so given the
    controller links (which fix the XOR rate) they are cut at those two.
    Each interval carries its exact Rayleigh probability and a midpoint
    capacity on which :func:`xorcow_batch` is executed.

    ``condition``, if given, maps a ``(states, n)`` array of controller-link
    capacities to a boolean mask; the result is then P(failure and mask).
    """
    n = params.n
    if n > 4:
        raise ValueError("enumeration oracle supports n <= 4")
    split = split or PhaseSplit.equal()
    W, snr = params.bandwidth_W, params.snr
    rt = rates_for(params, split, schedule)
    rx = xor_rates(params, split, schedule)
    c_reps, c_probs = _intervals([rt.R_D, rt.R_U, *rx], W, snr)

    ctrl = np.array(list(itertools.product(range(len(c_reps)), repeat=n)))
    ctrl_cap = c_reps[ctrl]
    ctrl_prob = np.prod(c_probs[ctrl], axis=1)
    if condition is not None:
        ctrl_prob = np.where(condition(ctrl_cap), ctrl_prob, 0.0)
    a_tilde = np.sum((ctrl_cap >= rt.R_D) & (ctrl_cap >= rt.R_U), axis=1)

    iu = np.triu_indices(n, k=1)
    n_edges = len(iu[0])
    terms = []
    for at in np.unique(a_tilde):
        nn_reps, nn_probs = _intervals([rt.R_U, rx[at]], W, snr)
        states = list(itertools.product(range(len(nn_reps)), repeat=n_edges))
        nn = np.array(states, dtype=int).reshape(len(states), n_edges)
        nn_cap = nn_reps[nn]
        nn_prob = np.prod(nn_probs[nn], axis=1)
        rows = np.flatnonzero(a_tilde == at)
        for start in range(0, len(rows), max(1, 200_000 // len(nn))):
            block = rows[start:start + max(1, 200_000 // len(nn))]
            g, e = len(block), len(nn)
            cap = np.zeros((g, e, n + 1, n + 1))
            cap[:, :, 0, 1:] = ctrl_cap[block][:, None, :]
            cap[:, :, 1:, 0] = ctrl_cap[block][:, None, :]
            sub = np.zeros((e, n, n))
            sub[:, iu[0], iu[1]] = nn_cap
            sub[:, iu[1], iu[0]] = nn_cap
            cap[:, :, 1:, 1:] = sub[None]
            dl, ul = xorcow_batch(cap.reshape(g * e, n + 1, n + 1), params, split, schedule, relays)
            failed = ~np.all(dl & ul, axis=1).reshape(g, e)
            weight = ctrl_prob[block][:, None] * nn_prob[None, :]
            terms.extend(weight[failed].tolist())
    return math.fsum(terms)
