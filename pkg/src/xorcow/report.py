"""Run configuration and result emission (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

from .analytic import SCHEDULES, PhaseSplit
from .channel import SystemParams, db_to_linear

STATUSES = ("ok", "bracket-failure")
FORMATS = ("csv", "json", "svg")
CSV_HEADER = ("scheme", "n", "m_bits", "min_snr_db", "aux", "status")


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    n: int
    m_bits: int
    min_snr_db: float
    aux: str
    status: str

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")


_TUPLE_FIELDS = ("split", "schemes", "n_values", "m_values")
SCHEMES = ("xorcow", "occupycow2", "freqhop")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one CLI run. Defaults are the printer scenario."""

    n: int = 30
    m_bits: int = 160
    cycle_T: float = 2e-3
    bandwidth_W: float = 20e6
    snr_db: float = 2.0
    scheme: str = "xorcow"
    schemes: tuple[str, ...] = ("xorcow-fixed", "freqhop")
    k: int = 1
    k_max: int = 64
    schedule: str = "fixed"
    split: tuple[float, float, float] | None = None
    target: float = 1e-9
    lo_db: float = -10.0
    hi_db: float = 60.0
    resolution_db: float = 0.01
    trials: int = 100_000
    seed: int = 0
    n_values: tuple[int, ...] = (1, 2, 3, 5, 7, 10, 15, 20, 30, 40, 50, 60)
    m_values: tuple[int, ...] = (160,)
    max_n: int = 3
    workers: int = 1
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        for name in _TUPLE_FIELDS:
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))
        self.params()
        self.phase_split()
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not 0.0 < self.target < 1.0:
            raise ValueError(f"target must lie in (0, 1), got {self.target!r}")
        if not (self.lo_db < self.hi_db and self.resolution_db > 0):
            raise ValueError("need lo_db < hi_db and resolution_db > 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 1 <= self.k <= self.k_max:
            raise ValueError(f"need 1 <= k <= k_max, got k={self.k}, k_max={self.k_max}")
        if self.max_n < 1 or self.workers < 1:
            raise ValueError("max_n and workers must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if not self.n_values or not self.m_values:
            raise ValueError("n_values and m_values must be nonempty")

    def params(self) -> SystemParams:
        return SystemParams(self.n, self.m_bits, self.cycle_T, self.bandwidth_W, db_to_linear(self.snr_db))

    def phase_split(self) -> PhaseSplit:
        return PhaseSplit.equal() if self.split is None else PhaseSplit(*self.split)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        return cls.from_dict(data)


def _fmt(x):
    # shortest string that round-trips, so no digits are lost
    return repr(float(x))


def render_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.scheme, r.n, r.m_bits, _fmt(r.min_snr_db), r.aux, r.status])
    return buf.getvalue()


def render_json(rows: Sequence[SweepRow]) -> str:
    out = []
    for r in rows:
        d = asdict(r)
        if math.isnan(d["min_snr_db"]):
            d["min_snr_db"] = None
        out.append(d)
    return json.dumps(out, indent=2) + "\n"


def _ticks(lo, hi, count=5):
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    n = round((stop - start) / step)
    return [start + i * step for i in range(n + 1)]


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def render_svg(rows: Sequence[SweepRow]) -> str:
    """Line chart of minimum SNR against network size, one series per (scheme, m)."""
    series = {}
    for r in rows:
        series.setdefault((r.scheme, r.m_bits), [])
        if r.status == "ok" and math.isfinite(r.min_snr_db):
            series[(r.scheme, r.m_bits)].append((r.n, r.min_snr_db))
    pts = [p for s in series.values() for p in s]
    xs = _ticks(min((p[0] for p in pts), default=0), max((p[0] for p in pts), default=1))
    ys = _ticks(min((p[1] for p in pts), default=0.0), max((p[1] for p in pts), default=1.0))
    W, H, L, R, T, B = 640, 400, 70, 170, 20, 50
    pw, ph = W - L - R, H - T - B

    def sx(x):
        return L + (x - xs[0]) / (xs[-1] - xs[0]) * pw

    def sy(y):
        return T + ph - (y - ys[0]) / (ys[-1] - ys[0]) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    for x in xs:
        out.append(f'<line x1="{sx(x):.2f}" y1="{T + ph}" x2="{sx(x):.2f}" y2="{T + ph + 4}" stroke="#000"/>')
        out.append(f'<text x="{sx(x):.2f}" y="{T + ph + 16}" text-anchor="middle">{x:g}</text>')
    for y in ys:
        out.append(f'<line x1="{L - 4}" y1="{sy(y):.2f}" x2="{L}" y2="{sy(y):.2f}" stroke="#000"/>')
        out.append(f'<text x="{L - 6}" y="{sy(y) + 4:.2f}" text-anchor="end">{y:g}</text>')
    out.append(f'<text x="{L + pw / 2:.2f}" y="{H - 10}" text-anchor="middle">network size n (nodes)</text>')
    out.append(f'<text x="16" y="{T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {T + ph / 2:.2f})">minimum SNR (dB)</text>')
    for i, ((scheme, m), s) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(s))
        if coords:
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = T + 14 + 16 * i
        out.append(f'<line x1="{L + pw + 10}" y1="{ly - 4}" x2="{L + pw + 28}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{L + pw + 32}" y="{ly}">{scheme} m={m}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_RENDERERS = {"csv": render_csv, "json": render_json, "svg": render_svg}


def render_results(rows: Sequence[SweepRow], format: str) -> str:
    if format not in _RENDERERS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if not rows:
        raise ValueError("no rows to write")
    return _RENDERERS[format](rows)


def write_results(rows: Sequence[SweepRow], format: str, path) -> Path:
    """Write ``rows`` to ``path``. Identical rows give identical bytes."""
    text = render_results(rows, format)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
