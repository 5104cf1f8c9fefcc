"""Exact cycle-failure probability of star-topology XOR-CoW.

The nodes are partitioned by which of their controller links survive the
downlink, uplink and XOR rates. The ordering of the three rates selects one
of six case formulas. Each formula sums the probability of a set
configuration times the probability that some node is left without its
downlink or uplink message.

Two evaluation paths exist. :func:`case_failure_term` and
:func:`success5_prob` / :func:`success6_prob` work on one
:class:`SetCounts` configuration at a time. :func:`xorcow_failure_prob`
evaluates every configuration at once on numpy grids. The tests check that
the two paths agree and that both match the exhaustive enumeration in
:mod:`xorcow.sim`.

Relay model
    ``"strong"`` (default): only nodes that decoded the downlink *and*
    delivered their uplink directly relay XOR packets for other nodes.
    ``"downlink"``: every node that decoded the downlink relays.

Variants of the first success factor
    ``success5="proof"`` (default) uses ``p_U`` for the uplink-only relays
    ``success5="theorem"`` uses ``p_X``.
    ``success6="theorem"`` (default) uses ``(1 - p_X**a)**b``
    ``success6="proof"`` uses ``(1 - p_U**a_tilde_x)**b``.
    The defaults are the variants that agree with protocol enumeration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

from .channel import (
    SystemParams,
    any_fail,
    any_fail_array,
    binom_pmf,
    cond_ratio,
    conditional_set,
    link_failure_prob,
    log_binom_pmf,
)

Schedule = Literal["fixed", "flexible"]
Relays = Literal["strong", "downlink"]

SCHEDULES = ("fixed", "flexible")
RELAYS = ("strong", "downlink")


@dataclass(frozen=True)
class PhaseSplit:
    """Fractions of the cycle given to the downlink, uplink and XOR phases."""

    f_D: float
    f_U: float
    f_X: float

    def __post_init__(self):
        fs = (self.f_D, self.f_U, self.f_X)
        if not all(math.isfinite(f) and 0.0 < f < 1.0 for f in fs):
            raise ValueError(f"phase fractions must lie in (0, 1), got {fs}")
        if abs(sum(fs) - 1.0) > 1e-12:
            raise ValueError(f"phase fractions must sum to 1, got {sum(fs)!r}")

    @classmethod
    def equal(cls):
        return cls(1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0)

    @classmethod
    def parse(cls, text):
        """Parse ``"fD,fU,fX"``."""
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"split needs three comma-separated fractions, got {text!r}")
        return cls(*parts)

    def durations(self, cycle_T):
        return self.f_D * cycle_T, self.f_U * cycle_T, self.f_X * cycle_T

    def __str__(self):
        return f"{self.f_D:.6g},{self.f_U:.6g},{self.f_X:.6g}"


@dataclass(frozen=True)
class RateTriple:
    R_D: float
    R_U: float
    R_X: float
    schedule: str = "fixed"
    a_tilde: int = 0


def _check_schedule(schedule):
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")


def _check_relays(relays):
    if relays not in RELAYS:
        raise ValueError(f"relays must be one of {RELAYS}, got {relays!r}")


def xor_rates(params: SystemParams, split: PhaseSplit, schedule: Schedule) -> np.ndarray:
    """XOR-phase rate indexed by the number of strong nodes ``a_tilde``.

    Constant for the fixed schedule. The flexible schedule only gives slots
    to the ``n - a_tilde`` nodes that need help.
    """
    _check_schedule(schedule)
    n, m = params.n, params.m_bits
    T_X = split.f_X * params.cycle_T
    if schedule == "fixed":
        return np.full(n + 1, m * n / T_X)
    return m * (n - np.arange(n + 1)) / T_X


def rates_for(params: SystemParams, split: PhaseSplit, schedule: Schedule = "fixed",
              a_tilde: int = 0) -> RateTriple:
    _check_schedule(schedule)
    n, m = params.n, params.m_bits
    if not 0 <= a_tilde <= n:
        raise ValueError(f"a_tilde must lie in [0, {n}], got {a_tilde}")
    T_D, T_U, T_X = split.durations(params.cycle_T)
    R_D = m * n / T_D
    if schedule == "fixed":
        return RateTriple(R_D, m * n / T_U, m * n / T_X, schedule, 0)
    # the uplink carries a one-bit downlink ACK; the XOR phase serves only nodes in need
    return RateTriple(R_D, (m + 1) * n / T_U, m * (n - a_tilde) / T_X, schedule, a_tilde)


class CaseId(enum.IntEnum):
    """Rate orderings that select the failure formula."""

    D_U_X = 1  # R_D >= R_U > R_X
    D_X_U = 2  # R_D > R_X >= R_U
    U_D_X = 3  # R_U >= R_D > R_X
    U_X_D = 4  # R_U > R_X >= R_D
    X_U_D = 5  # R_X >= R_U > R_D
    X_D_U = 6  # R_X > R_D >= R_U


def dispatch_case(R_D, R_U=None, R_X=None) -> CaseId:
    """Select the case for a rate triple.

    Accepts a :class:`RateTriple` or three rates. Total on all triples:
    all-equal rates go to case 1 and ``R_D == R_X > R_U`` to case 2, the
    only formulas that are exact there.
    """
    if isinstance(R_D, RateTriple):
        R_D, R_U, R_X = R_D.R_D, R_D.R_U, R_D.R_X
    if R_D >= R_U:
        if R_X < R_U or R_X == R_U == R_D:
            return CaseId.D_U_X
        if R_X <= R_D:
            return CaseId.D_X_U
        return CaseId.X_D_U
    if R_X < R_D:
        return CaseId.U_D_X
    if R_X < R_U:
        return CaseId.U_X_D
    return CaseId.X_U_D


@dataclass(frozen=True)
class SetCounts:
    """Cardinalities of the node sets for one configuration.

    ``a`` decoded the downlink; ``a_tilde`` of them also reached the
    controller directly in the uplink (strong nodes); ``a_tilde_x`` strong
    nodes keep their controller link at the XOR rate; ``a_check_x`` of the
    other downlink decoders regain it at the XOR rate; ``b`` nodes missed the
    downlink but delivered their uplink; ``b_tilde`` of those keep the
    controller link at the XOR rate.
    """

    a: int
    a_tilde: int | None = None
    a_tilde_x: int = 0
    a_check_x: int = 0
    b: int = 0
    b_tilde: int = 0

    def __post_init__(self):
        if self.a_tilde is None:
            object.__setattr__(self, "a_tilde", self.a)
        ok = (0 <= self.a_tilde <= self.a and 0 <= self.a_tilde_x <= self.a_tilde
              and 0 <= self.a_check_x <= self.a_check and 0 <= self.b_tilde <= self.b)
        if not ok:
            raise ValueError(f"inconsistent set counts {self}")

    @property
    def a_check(self):
        return self.a - self.a_tilde

    @property
    def a_tilde_u(self):
        return self.a_tilde - self.a_tilde_x

    def validate(self, n):
        if self.a + self.b > n:
            raise ValueError(f"a + b exceeds n={n}: {self}")


def _relay_fail(n_relays_x, p_U, p_X, s_XU, n_dl_only):
    """Per-node failure when the uplink must be relayed.

    The node needs one of ``n_relays_x`` relays (which reach the controller
    at the XOR rate) to overhear it at the uplink rate. Its downlink comes
    from any of those it also reaches at the XOR rate, or from one of
    ``n_dl_only`` further relays reached at the XOR rate.
    """
    ksum = math.fsum(binom_pmf(n_relays_x, k, p_U) * s_XU ** k for k in range(1, n_relays_x + 1))
    return p_U ** n_relays_x + p_X ** n_dl_only * ksum


def success5_prob(counts: SetCounts, p_U, p_X, n, variant="proof", relays: Relays = "strong"):
    """P(every node outside the strong-and-XOR set succeeds) for case 5.

    ``variant="proof"`` takes ``p_U`` in the first factor, ``"theorem"`` takes
    ``p_X``.
    """
    _check_relays(relays)
    c = counts
    s_XU = cond_ratio(p_X - p_U, 1.0 - p_U)
    base = {"proof": p_U, "theorem": p_X}[variant]
    first = (1.0 - base ** c.a_tilde_x) ** c.a_check
    dl_only = c.a_tilde_u + (c.a_check if relays == "downlink" else 0)
    per_node = 1.0 - _relay_fail(c.a_tilde_x, p_U, p_X, s_XU, dl_only)
    return first * per_node ** (n - c.a)


def _failure5(c: SetCounts, p_U, p_X, n, variant, relays):
    # 1 - success5 without cancellation when success is close to 1
    s_XU = cond_ratio(p_X - p_U, 1.0 - p_U)
    base = {"proof": p_U, "theorem": p_X}[variant]
    dl_only = c.a_tilde_u + (c.a_check if relays == "downlink" else 0)
    return float(_fail_from_logs((c.a_check, base ** c.a_tilde_x),
                                 (n - c.a, _relay_fail(c.a_tilde_x, p_U, p_X, s_XU, dl_only))))


def success6_prob(counts: SetCounts, p_U, p_X, n, variant="theorem"):
    """P(every node outside the downlink set succeeds) for case 6."""
    c = counts
    s_XU = cond_ratio(p_X - p_U, 1.0 - p_U)
    if variant == "theorem":
        first = (1.0 - p_X ** c.a) ** c.b
    elif variant == "proof":
        first = (1.0 - p_U ** c.a_tilde_x) ** c.b
    else:
        raise ValueError(f"unknown success6 variant {variant!r}")
    per_node = 1.0 - _relay_fail(c.a_tilde_x, p_U, p_X, s_XU, c.a - c.a_tilde_x)
    return first * per_node ** (n - c.a - c.b)


def _failure6(c: SetCounts, p_U, p_X, n, variant):
    s_XU = cond_ratio(p_X - p_U, 1.0 - p_U)
    miss = {"theorem": p_X ** c.a, "proof": p_U ** c.a_tilde_x}[variant]
    return float(_fail_from_logs((c.b, miss),
                                 (n - c.a - c.b, _relay_fail(c.a_tilde_x, p_U, p_X, s_XU, c.a - c.a_tilde_x))))


def case_failure_term(case: CaseId, counts: SetCounts, n, p_D, p_U, p_X, *,
                      relays: Relays = "strong", success5="proof", success6="theorem"):
    """Probability of configuration ``counts`` times P(some node fails | counts)."""
    _check_relays(relays)
    case = CaseId(case)
    c = counts
    c.validate(n)
    cs = conditional_set(p_D, p_U, p_X)
    pa = binom_pmf(n, c.a, p_D)
    if case == CaseId.D_U_X:
        return pa * binom_pmf(n - c.a, c.b, cs.q_UD) * any_fail(n - c.a - c.b, p_U ** c.a)
    if case == CaseId.D_X_U:
        return (pa * binom_pmf(n - c.a, c.b, cs.q_UD) * binom_pmf(c.b, c.b_tilde, cs.r_UXUD)
                * any_fail(n - c.a - c.b_tilde, p_X ** c.a))
    if case == CaseId.U_D_X:
        relay_count = c.a_tilde if relays == "strong" else c.a
        return pa * binom_pmf(c.a, c.a_tilde, cs.s_UD) * any_fail(n - c.a, p_U ** relay_count)
    if case == CaseId.U_X_D:
        relay_count = c.a_tilde + (c.a_check_x if relays == "downlink" else 0)
        return (pa * binom_pmf(c.a, c.a_tilde, cs.s_UD) * binom_pmf(c.a_check, c.a_check_x, cs.r_DXDU)
                * any_fail(n - c.a_tilde - c.a_check_x, p_U ** relay_count))
    if case == CaseId.X_U_D:
        if success5 not in ("proof", "theorem"):
            raise ValueError(f"unknown success5 variant {success5!r}")
        fail = _failure5(c, p_U, p_X, n, success5, relays)
        return pa * binom_pmf(c.a, c.a_tilde, cs.s_UD) * binom_pmf(c.a_tilde, c.a_tilde_x, cs.s_XU) * fail
    if c.a_tilde != c.a:
        raise ValueError("case 6 has every downlink decoder strong (a_tilde == a)")
    if success6 not in ("proof", "theorem"):
        raise ValueError(f"unknown success6 variant {success6!r}")
    fail = _failure6(c, p_U, p_X, n, success6)
    return pa * binom_pmf(c.a, c.a_tilde_x, cs.s_XD) * binom_pmf(n - c.a, c.b, cs.q_UD) * fail


def iter_case_counts(case: CaseId, n, a=None) -> Iterator[SetCounts]:
    """Every configuration summed over for ``case`` (optionally at fixed ``a``)."""
    case = CaseId(case)
    for aa in range(n + 1) if a is None else (a,):
        if case == CaseId.D_U_X:
            for b in range(n - aa + 1):
                yield SetCounts(aa, b=b)
        elif case == CaseId.D_X_U:
            for b in range(n - aa + 1):
                for bt in range(b + 1):
                    yield SetCounts(aa, b=b, b_tilde=bt)
        elif case == CaseId.U_D_X:
            for at in range(aa + 1):
                yield SetCounts(aa, at)
        elif case == CaseId.U_X_D:
            for at in range(aa + 1):
                for ax in range(aa - at + 1):
                    yield SetCounts(aa, at, a_check_x=ax)
        elif case == CaseId.X_U_D:
            for at in range(aa + 1):
                for atx in range(at + 1):
                    yield SetCounts(aa, at, a_tilde_x=atx)
        else:
            for atx in range(aa + 1):
                for b in range(n - aa + 1):
                    yield SetCounts(aa, aa, a_tilde_x=atx, b=b)


def case_partition_mass(case: CaseId, n, p_D, p_U, p_X):
    """Sum of configuration probabilities over every count of ``case`` (should be 1)."""
    case = CaseId(case)
    cs = conditional_set(p_D, p_U, p_X)
    terms = []
    for c in iter_case_counts(case, n):
        t = binom_pmf(n, c.a, p_D)
        if case in (CaseId.D_U_X, CaseId.D_X_U):
            t *= binom_pmf(n - c.a, c.b, cs.q_UD)
            if case == CaseId.D_X_U:
                t *= binom_pmf(c.b, c.b_tilde, cs.r_UXUD)
        elif case == CaseId.X_D_U:
            t *= binom_pmf(c.a, c.a_tilde_x, cs.s_XD) * binom_pmf(n - c.a, c.b, cs.q_UD)
        else:
            t *= binom_pmf(c.a, c.a_tilde, cs.s_UD)
            if case == CaseId.U_X_D:
                t *= binom_pmf(c.a_check, c.a_check_x, cs.r_DXDU)
            elif case == CaseId.X_U_D:
                t *= binom_pmf(c.a_tilde, c.a_tilde_x, cs.s_XU)
        terms.append(t)
    return math.fsum(terms)


def _outages(params: SystemParams, split: PhaseSplit, schedule):
    r = rates_for(params, split, schedule)
    W, snr = params.bandwidth_W, params.snr
    rx = xor_rates(params, split, schedule)
    return r.R_D, r.R_U, rx, link_failure_prob(r.R_D, W, snr), link_failure_prob(r.R_U, W, snr), \
        np.atleast_1d(link_failure_prob(rx, W, snr))


def xorcow_failure_prob_reference(params: SystemParams, split: PhaseSplit, schedule: Schedule = "fixed",
                                  **variants) -> float:
    """Configuration-by-configuration evaluation with :func:`case_failure_term`.

    Slow (pure Python); used to cross-check :func:`xorcow_failure_prob`.
    """
    n = params.n
    R_D, R_U, rx, p_D, p_U, px = _outages(params, split, schedule)
    terms = []
    if R_D >= R_U:
        for a in range(n + 1):
            case = dispatch_case(R_D, R_U, rx[a])
            for c in iter_case_counts(case, n, a):
                terms.append(case_failure_term(case, c, n, p_D, p_U, float(px[a]), **variants))
    else:
        for a in range(n + 1):
            for c in iter_case_counts(CaseId.U_D_X, n, a):
                at = c.a_tilde
                case = dispatch_case(R_D, R_U, rx[at])
                if case == CaseId.U_D_X:
                    group = [c]
                elif case == CaseId.U_X_D:
                    group = [SetCounts(a, at, a_check_x=k) for k in range(a - at + 1)]
                else:
                    group = [SetCounts(a, at, a_tilde_x=k) for k in range(at + 1)]
                for g in group:
                    terms.append(case_failure_term(case, g, n, p_D, p_U, float(px[at]), **variants))
    return min(1.0, max(0.0, math.fsum(terms)))


# ---------------------------------------------------------------------------
# vectorised evaluation


def _B(N, k, p):
    return np.exp(log_binom_pmf(N, k, p))


def _pos(x):
    return np.maximum(x, 0)


def _relay_fail_table(N, M, p_U, p_X, s_XU):
    """Vectorised :func:`_relay_fail` for relay counts ``N`` and extra relays ``M``.

    ``p_X`` and ``s_XU`` broadcast against ``N``; the k-sum runs over a new
    trailing axis.
    """
    N = np.asarray(N)
    kmax = int(N.max()) if N.size else 0
    k = np.arange(1, kmax + 1)
    s = np.asarray(s_XU, dtype=float)[..., None]
    terms = _B(N[..., None], k, p_U) * s ** k
    ksum = terms.sum(axis=-1)
    return p_U ** N + np.asarray(p_X, dtype=float) ** M * ksum


def _log1m(x):
    with np.errstate(divide="ignore"):
        return np.log1p(-np.clip(x, 0.0, 1.0))


def _fail_from_logs(*pairs):
    """``1 - prod(1 - f_i)**e_i`` from (exponent, failure) pairs, stable near 0."""
    total = 0.0
    with np.errstate(invalid="ignore"):
        for e, f in pairs:
            e = np.asarray(e, dtype=float)
            total = total + np.where(e > 0, e * _log1m(f), 0.0)
    return -np.expm1(total)


def _terms_case1(n, p_D, p_U, q):
    a = np.arange(n + 1)[:, None]
    b = np.arange(n + 1)[None, :]
    return _B(n, a, p_D) * _B(n - a, b, q) * any_fail_array(_pos(n - a - b), p_U ** a)


def _terms_case2(n, p_D, p_U, px_a):
    a = np.arange(n + 1)[:, None, None]
    b = np.arange(n + 1)[None, :, None]
    bt = np.arange(n + 1)[None, None, :]
    pxa = px_a[:, None, None]
    q = cond_ratio(p_U, p_D) if p_D > 0 else 1.0
    r = cond_ratio(pxa - p_U, p_D - p_U)
    return (_B(n, a, p_D) * _B(n - a, b, q) * _B(b, bt, r)
            * any_fail_array(_pos(n - a - bt), pxa ** a))


def _terms_case6(n, p_D, p_U, px_a, variant):
    a = np.arange(n + 1)[:, None, None]
    ax = np.arange(n + 1)[None, :, None]
    b = np.arange(n + 1)[None, None, :]
    pxa = px_a[:, None, None]
    q = cond_ratio(p_U, p_D) if p_D > 0 else 1.0
    s_XD = cond_ratio(pxa - p_D, 1.0 - p_D)
    s_XU = cond_ratio(pxa - p_U, 1.0 - p_U)
    f_node = _relay_fail_table(ax + 0 * a, _pos(a - ax), p_U, pxa, s_XU)
    first = pxa ** a if variant == "theorem" else p_U ** ax
    fail = _fail_from_logs((b, first), (_pos(n - a - b), f_node))
    return _B(n, a, p_D) * _B(a, ax, s_XD) * _B(n - a, b, q) * fail


def _terms_case3(n, p_D, p_U, relays):
    a = np.arange(n + 1)[:, None]
    at = np.arange(n + 1)[None, :]
    s_UD = cond_ratio(p_U - p_D, 1.0 - p_D)
    relay_count = at if relays == "strong" else a + 0 * at
    return _B(n, a, p_D) * _B(a, at, s_UD) * any_fail_array(_pos(n - a), p_U ** relay_count)


def _terms_case4(n, p_D, p_U, px_t, relays):
    a = np.arange(n + 1)[:, None, None]
    at = np.arange(n + 1)[None, :, None]
    ax = np.arange(n + 1)[None, None, :]
    pxt = px_t[None, :, None]
    s_UD = cond_ratio(p_U - p_D, 1.0 - p_D)
    r = cond_ratio(pxt - p_D, p_U - p_D)
    relay_count = at + (ax if relays == "downlink" else 0)
    return (_B(n, a, p_D) * _B(a, at, s_UD) * _B(a - at, ax, r)
            * any_fail_array(_pos(n - at - ax), p_U ** relay_count))


def _terms_case5(n, p_D, p_U, px_t, relays, variant):
    a = np.arange(n + 1)[:, None, None]
    at = np.arange(n + 1)[None, :, None]
    atx = np.arange(n + 1)[None, None, :]
    pxt = px_t[None, :, None]
    s_UD = cond_ratio(p_U - p_D, 1.0 - p_D)
    s_XU = cond_ratio(pxt - p_U, 1.0 - p_U)
    dl_only = _pos(at - atx) + (_pos(a - at) if relays == "downlink" else 0)
    f_node = _relay_fail_table(atx + 0 * at, dl_only, p_U, pxt, s_XU)
    first = p_U ** atx if variant == "proof" else pxt ** atx
    fail = _fail_from_logs((_pos(a - at), first), (n - a, f_node))
    return _B(n, a, p_D) * _B(a, at, s_UD) * _B(at, atx, s_XU) * fail


def xorcow_failure_prob(params: SystemParams, split: PhaseSplit | None = None, schedule: Schedule = "fixed",
                        *, relays: Relays = "strong", success5="proof", success6="theorem") -> float:
    """Probability that some node misses its downlink or uplink message in a cycle.

    For the flexible schedule the XOR rate depends on the number of strong
    nodes, so the case is chosen per configuration. The result is summed
    with ``math.fsum`` over at most ``(n+1)**3`` terms.
    """
    _check_schedule(schedule)
    _check_relays(relays)
    if success5 not in ("proof", "theorem") or success6 not in ("proof", "theorem"):
        raise ValueError("success variants are 'proof' or 'theorem'")
    split = split or PhaseSplit.equal()
    n = params.n
    R_D, R_U, rx, p_D, p_U, px = _outages(params, split, schedule)
    pieces = []
    if R_D >= R_U:
        cases = np.array([dispatch_case(R_D, R_U, r) for r in rx])
        q = cond_ratio(p_U, p_D) if p_D > 0 else 1.0
        if np.any(cases == CaseId.D_U_X):
            pieces.append(_terms_case1(n, p_D, p_U, q)[cases == CaseId.D_U_X])
        if np.any(cases == CaseId.D_X_U):
            pieces.append(_terms_case2(n, p_D, p_U, px)[cases == CaseId.D_X_U])
        if np.any(cases == CaseId.X_D_U):
            pieces.append(_terms_case6(n, p_D, p_U, px, success6)[cases == CaseId.X_D_U])
    else:
        cases = np.array([dispatch_case(R_D, R_U, r) for r in rx])
        if np.any(cases == CaseId.U_D_X):
            pieces.append(_terms_case3(n, p_D, p_U, relays)[:, cases == CaseId.U_D_X])
        if np.any(cases == CaseId.U_X_D):
            pieces.append(_terms_case4(n, p_D, p_U, px, relays)[:, cases == CaseId.U_X_D])
        if np.any(cases == CaseId.X_U_D):
            pieces.append(_terms_case5(n, p_D, p_U, px, relays, success5)[:, cases == CaseId.X_U_D])
    total = math.fsum(np.concatenate([p.ravel() for p in pieces])) if pieces else 0.0
    return min(1.0, max(0.0, total))


def occupycow2_failure_prob(params: SystemParams) -> float:
    """Two-hop fixed-rate Occupy CoW with four equal phases of ``T/4``.

    Every phase runs at ``4 m n / T``; a node outside the direct set fails
    unless it reaches one direct node, giving
    ``sum_a B(n, a, p) F(n - a, p**a)``.
    """
    n = params.n
    p = link_failure_prob(4 * params.m_bits * n / params.cycle_T, params.bandwidth_W, params.snr)
    return two_hop_failure(n, p)


def two_hop_failure(n, p):
    """``1 - sum_a B(n, a, p) (1 - p**a)**(n - a)`` computed as a sum of failures."""
    a = np.arange(n + 1)
    return min(1.0, math.fsum(_B(n, a, p) * any_fail_array(n - a, p ** a)))
