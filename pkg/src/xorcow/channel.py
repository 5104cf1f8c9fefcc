"""Fading and outage primitives shared by every other module.

A link is good for a cycle when its delay-limited capacity
``W * log2(1 + |h|^2 * snr)`` reaches the transmission rate. Channel power
gains are unit-mean exponential (Rayleigh amplitude), so outage has a closed
form. SNR is linear everywhere in the library; :func:`db_to_linear` is the
single dB conversion point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

LN2 = math.log(2.0)


def db_to_linear(snr_db):
    """Convert decibels to a linear power ratio."""
    out = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(snr):
    return 10.0 * math.log10(snr)


@dataclass(frozen=True)
class SystemParams:
    """Scenario for a star network: controller plus ``n`` client nodes.

    ``m_bits`` is the payload of every downlink and every uplink message,
    ``cycle_T`` the cycle length in seconds, ``bandwidth_W`` in Hz and
    ``snr`` the nominal linear SNR of every link.
    """

    n: int = 30
    m_bits: int = 160
    cycle_T: float = 2e-3
    bandwidth_W: float = 20e6
    snr: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if int(self.m_bits) != self.m_bits or self.m_bits < 1:
            raise ValueError(f"m_bits must be a positive integer, got {self.m_bits!r}")
        if not (math.isfinite(self.cycle_T) and self.cycle_T > 0):
            raise ValueError(f"cycle_T must be positive, got {self.cycle_T!r}")
        if not (math.isfinite(self.bandwidth_W) and self.bandwidth_W > 0):
            raise ValueError(f"bandwidth_W must be positive, got {self.bandwidth_W!r}")
        if math.isnan(self.snr) or self.snr < 0:
            raise ValueError(f"snr must be >= 0, got {self.snr!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m_bits", int(self.m_bits))


def capacity(gain, bandwidth, snr):
    """Delay-limited capacity in bits/s for channel power gain(s) ``gain``."""
    with np.errstate(invalid="ignore"):
        return bandwidth * np.log2(1.0 + np.asarray(gain, dtype=float) * snr)


def _outage_exponent(rate, bandwidth):
    # 2**(R/W) - 1, accurate for small spectral efficiencies
    return np.expm1(np.asarray(rate, dtype=float) / bandwidth * LN2)


def link_failure_prob(rate, bandwidth, snr):
    """P(capacity < rate) on a unit-mean Rayleigh link.

    Accepts scalars or numpy arrays for ``rate``. Depends on rate and
    bandwidth only through ``rate / bandwidth``.
    """
    r = np.asarray(rate, dtype=float)
    for name, v in (("rate", r), ("bandwidth", bandwidth)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must be finite")
    if math.isnan(snr):
        raise ValueError("snr must not be NaN")
    if np.any(r < 0):
        raise ValueError("rate must be >= 0")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    if snr < 0:
        raise ValueError("snr must be >= 0")
    x = _outage_exponent(r, bandwidth)
    if snr == 0:
        p = np.where(r > 0, 1.0, 0.0)
    else:
        p = -np.expm1(-x / snr)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def survival_at(rate, bandwidth, snr):
    """P(capacity >= rate); exactly 1 at rate 0 and 0 at rate infinity."""
    if rate == 0:
        return 1.0
    if math.isinf(rate) or snr == 0:
        return 0.0
    return math.exp(-float(_outage_exponent(rate, bandwidth)) / snr)


def _check_prob(p, name="p"):
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def log_binom_pmf(n, m, p):
    """Log of ``binom_pmf``; vectorised, ``-inf`` outside ``0 <= m <= n``."""
    n = np.asarray(n)
    m = np.asarray(m)
    p = np.asarray(p, dtype=float)
    valid = (m >= 0) & (m <= n)
    nn = np.where(valid, n, 0)
    mm = np.where(valid, m, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (gammaln(nn + 1.0) - gammaln(mm + 1.0) - gammaln(nn - mm + 1.0)
               + xlog1py(mm, -p) + xlogy(nn - mm, p))
    return np.where(valid, out, -np.inf)


def binom_pmf(n, m, p):
    """C(n, m) (1-p)^m p^(n-m).

    ``p`` is the per-experiment *failure* probability and ``m`` counts
    successes. Evaluated in the log domain.
    """
    if m < 0 or m > n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    _check_prob(p)
    return float(np.exp(log_binom_pmf(n, m, p)))


def any_fail(n, p):
    """Probability that at least one of ``n`` independent experiments fails."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _check_prob(p)
    if n == 0 or p == 0:
        return 0.0
    if p == 1:
        return 1.0
    return -math.expm1(n * math.log1p(-p))


def any_fail_array(n, p):
    """Vectorised :func:`any_fail` without domain checks."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.expm1(xlog1py(np.asarray(n, dtype=float), -np.asarray(p, dtype=float)))


def cond_ratio(num, den):
    """Conditional probability ``num / den`` with the tie policy.

    A vanishing denominator means the conditioning event is empty (equal
    rates), so the conditional "changes nothing" and is 0. Results are clamped
    to [0, 1] to absorb rounding in differences of nearly equal outages.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    r = np.clip(r, 0.0, 1.0)
    return float(r) if r.ndim == 0 else r


_ORDER_TOL = 1e-12


@dataclass(frozen=True)
class ConditionalSet:
    """Conditional link probabilities between the three phase rates.

    Built from the outage probabilities ``p_D``, ``p_U``, ``p_X`` of one link
    at the downlink, uplink and XOR rates. Each property is only meaningful
    under a rate ordering; asking for one whose ordering is violated raises
    ``ValueError``.
    """

    p_D: float
    p_U: float
    p_X: float

    def __post_init__(self):
        for name in ("p_D", "p_U", "p_X"):
            _check_prob(getattr(self, name), name)

    def _need(self, ok, field):
        if not ok:
            raise ValueError(f"{field} undefined for p_D={self.p_D}, p_U={self.p_U}, p_X={self.p_X}")

    @property
    def q_UD(self):
        """P(C < R_U | C < R_D); probability a downlink failure stays failed."""
        self._need(self.p_U <= self.p_D + _ORDER_TOL, "q_UD")
        if self.p_D == 0:
            return 1.0
        return min(1.0, self.p_U / self.p_D)

    @property
    def s_UD(self):
        """P(C < R_U | C >= R_D)."""
        self._need(self.p_U >= self.p_D - _ORDER_TOL, "s_UD")
        return cond_ratio(self.p_U - self.p_D, 1.0 - self.p_D)

    @property
    def s_XU(self):
        """P(C < R_X | C >= R_U)."""
        self._need(self.p_X >= self.p_U - _ORDER_TOL, "s_XU")
        return cond_ratio(self.p_X - self.p_U, 1.0 - self.p_U)

    @property
    def s_XD(self):
        """P(C < R_X | C >= R_D)."""
        self._need(self.p_X >= self.p_D - _ORDER_TOL, "s_XD")
        return cond_ratio(self.p_X - self.p_D, 1.0 - self.p_D)

    @property
    def r_UXUD(self):
        """P(R_U <= C < R_X | R_U <= C < R_D)."""
        self._need(self.p_U - _ORDER_TOL <= self.p_X <= self.p_D + _ORDER_TOL, "r_UXUD")
        return cond_ratio(self.p_X - self.p_U, self.p_D - self.p_U)

    @property
    def r_DXDU(self):
        """P(R_D <= C < R_X | R_D <= C < R_U)."""
        self._need(self.p_D - _ORDER_TOL <= self.p_X <= self.p_U + _ORDER_TOL, "r_DXDU")
        return cond_ratio(self.p_X - self.p_D, self.p_U - self.p_D)


def conditional_set(p_D, p_U, p_X):
    return ConditionalSet(float(p_D), float(p_U), float(p_X))
