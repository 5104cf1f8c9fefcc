"""Command-line front end.

Settings are layered: built-in defaults, then ``XORCOW_SEED``, then a JSON
``--config`` file, then explicit flags. Exit status is 0 on success, 1 on a
computation or bracket failure and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .analytic import PhaseSplit, occupycow2_failure_prob, xorcow_failure_prob
from .channel import db_to_linear
from .report import FORMATS, SCHEMES, RunConfig, write_results, render_results
from .search import (
    SWEEP_SCHEMES,
    BracketError,
    freqhop_failure_prob,
    min_snr,
    occupycow2_evaluator,
    optimize_freqhop_k,
    optimize_phase_split,
    sweep_network_size,
    xorcow_evaluator,
)
from .sim import brute_force_failure_prob, estimate_failure, theorem_counterexamples

ORACLE_SNRS_DB = (-5.0, 0.0, 5.0, 10.0)
ORACLE_SPLITS = (None, (0.5, 0.25, 0.25), (0.25, 0.5, 0.25))
ORACLE_TOL = 1e-10
THEOREM_SNRS_DB = (-10.0, -5.0, 0.0)


class UsageError(ValueError):
    pass


def _num(x):
    return format(x, ".12g")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _scaled(factor):
    return lambda text: float(text) * factor


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("scenario")
    g.add_argument("--config", help="JSON run configuration; flags override its values")
    g.add_argument("--n", type=int, help="number of client nodes (default 30)")
    g.add_argument("--m-bits", dest="m_bits", type=int, help="message size in bits (default 160)")
    g.add_argument("--cycle-ms", dest="cycle_T", type=_scaled(1e-3), help="cycle length in ms (default 2)")
    g.add_argument("--bandwidth-mhz", dest="bandwidth_W", type=_scaled(1e6), help="bandwidth in MHz (default 20)")
    g.add_argument("--snr-db", dest="snr_db", type=float, help="nominal SNR in dB")
    g.add_argument("--schedule", choices=("fixed", "flexible"))
    g.add_argument("--split", type=_floats, help="phase fractions fD,fU,fX (default equal)")
    g.add_argument("--target", type=float, help="target failure probability (default 1e-9)")
    g.add_argument("--lo-db", dest="lo_db", type=float)
    g.add_argument("--hi-db", dest="hi_db", type=float)
    g.add_argument("--resolution-db", dest="resolution_db", type=float)
    g.add_argument("--scheme", choices=SCHEMES)
    g.add_argument("--k", type=int, help="frequency-hopping sub-channels")
    g.add_argument("--k-max", dest="k_max", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int, help="RNG seed (default $XORCOW_SEED or 0)")
    g.add_argument("--workers", type=int)
    g.add_argument("--schemes", type=_names, help=f"sweep schemes from {','.join(SWEEP_SCHEMES)}")
    g.add_argument("--n-values", dest="n_values", type=_ints)
    g.add_argument("--m-values", dest="m_values", type=_ints)
    g.add_argument("--max-n", dest="max_n", type=int)
    g.add_argument("--out", help="output file for tables")
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--dump-config", dest="dump_config", action="store_true",
                   help="print the effective configuration as JSON and exit")

    parser = argparse.ArgumentParser(prog="xorcow", description="XOR-CoW reliability analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("eval", "failure probability at one SNR"),
        ("min-snr", "minimum SNR meeting the target"),
        ("sweep", "minimum SNR against network size"),
        ("optimize-phases", "phase split minimising the required SNR"),
        ("freqhop", "best sub-channel count for frequency hopping"),
        ("simulate", "Monte Carlo failure estimate"),
        ("validate", "oracle agreement and structural property checks"),
    ):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def resolve_config(ns: argparse.Namespace, environ=os.environ) -> RunConfig:
    data = {}
    if "XORCOW_SEED" in environ:
        try:
            data["seed"] = int(environ["XORCOW_SEED"])
        except ValueError:
            raise UsageError(f"XORCOW_SEED must be an integer, got {environ['XORCOW_SEED']!r}")
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "dump_config")}
    path = getattr(ns, "config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        data.update(loaded)
    data.update(flags)
    try:
        return RunConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def _evaluator(cfg: RunConfig):
    params = cfg.params()
    if cfg.scheme == "xorcow":
        return xorcow_evaluator(params, cfg.phase_split(), cfg.schedule)
    if cfg.scheme == "occupycow2":
        return occupycow2_evaluator(params)
    return lambda snr: freqhop_failure_prob(replace(params, snr=snr), cfg.k)


def cmd_eval(cfg: RunConfig, out):
    print(f"p_fail {_num(_evaluator(cfg)(db_to_linear(cfg.snr_db)))}", file=out)
    return 0


def cmd_min_snr(cfg: RunConfig, out):
    res = min_snr(cfg.target, _evaluator(cfg), cfg.lo_db, cfg.hi_db, cfg.resolution_db)
    print(f"min_snr_db {_num(res.snr_db)}", file=out)
    print(f"achieved_pfail {_num(res.achieved_pfail)}", file=out)
    print(f"iterations {res.iterations}", file=out)
    return 0


def cmd_sweep(cfg: RunConfig, out):
    bad = [s for s in cfg.schemes if s not in SWEEP_SCHEMES]
    if bad:
        raise UsageError(f"unknown sweep scheme(s) {bad}; choose from {SWEEP_SCHEMES}")
    template = cfg.params()
    rows = sweep_network_size(cfg.n_values, template, cfg.schemes, cfg.target, cfg.m_values,
                              cfg.k_max, cfg.workers, cfg.lo_db, cfg.hi_db, cfg.resolution_db)
    if cfg.out:
        write_results(rows, cfg.format, cfg.out)
        print(f"wrote {len(rows)} rows to {cfg.out}", file=out)
    else:
        out.write(render_results(rows, cfg.format))
    return 0 if all(r.status == "ok" for r in rows) else 1


def cmd_optimize_phases(cfg: RunConfig, out):
    params = cfg.params()
    choice = optimize_phase_split(params, cfg.target, cfg.schedule, lo_db=cfg.lo_db, hi_db=cfg.hi_db,
                                  resolution_db=cfg.resolution_db)
    equal = min_snr(cfg.target, xorcow_evaluator(params, None, cfg.schedule), cfg.lo_db, cfg.hi_db,
                    cfg.resolution_db)
    s = choice.split
    print(f"split {_num(s.f_D)},{_num(s.f_U)},{_num(s.f_X)}", file=out)
    print(f"min_snr_db {_num(choice.snr_db)}", file=out)
    print(f"equal_split_snr_db {_num(equal.snr_db)}", file=out)
    return 0


def cmd_freqhop(cfg: RunConfig, out):
    choice = optimize_freqhop_k(cfg.params(), cfg.target, cfg.k_max, cfg.lo_db, cfg.hi_db, cfg.resolution_db)
    print(f"k {choice.k}", file=out)
    print(f"min_snr_db {_num(choice.snr_db)}", file=out)
    return 0


def cmd_simulate(cfg: RunConfig, out):
    params = cfg.params()
    if cfg.scheme == "xorcow":
        scheme, exact = f"xorcow-{cfg.schedule}", xorcow_failure_prob(params, cfg.phase_split(), cfg.schedule)
    elif cfg.scheme == "occupycow2":
        scheme, exact = "occupycow2", occupycow2_failure_prob(params)
    else:
        raise UsageError("simulate supports schemes xorcow and occupycow2")
    est = estimate_failure(params, cfg.phase_split(), scheme, cfg.trials, cfg.seed, workers=cfg.workers)
    print(f"trials {est.trials}", file=out)
    print(f"failures {est.failures}", file=out)
    print(f"p_hat {_num(est.p_hat)}", file=out)
    print(f"ci95_half_width {_num(est.ci95_half_width)}", file=out)
    print(f"analytic {_num(exact)}", file=out)
    return 0


def cmd_validate(cfg: RunConfig, out):
    if cfg.max_n > 4:
        raise UsageError("validate enumerates every link state; use --max-n <= 4")
    ok = True
    base = cfg.params()
    for n in range(1, cfg.max_n + 1):
        worst = 0.0
        for schedule in ("fixed", "flexible"):
            for snr_db in ORACLE_SNRS_DB:
                for fr in ORACLE_SPLITS:
                    split = PhaseSplit(*fr) if fr else PhaseSplit.equal()
                    p = replace(base, n=n, snr=db_to_linear(snr_db))
                    err = abs(xorcow_failure_prob(p, split, schedule) - brute_force_failure_prob(p, split, schedule))
                    worst = max(worst, err)
        passed = worst <= ORACLE_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} oracle n={n} max_abs_err={_num(worst)}", file=out)
    for n in range(1, cfg.max_n + 1):
        for snr_db in THEOREM_SNRS_DB:
            p = replace(base, n=n, snr=db_to_linear(snr_db))
            chk = theorem_counterexamples(p, cfg.trials, cfg.seed)
            ok &= chk.passed
            print(f"{'PASS' if chk.passed else 'FAIL'} theorems n={n} snr_db={_num(snr_db)} "
                  f"common_path={chk.common_path_violations} implication={chk.implication_violations} "
                  f"occupy_successes={chk.occupy_successes}", file=out)
    return 0 if ok else 1


COMMANDS = {
    "eval": cmd_eval,
    "min-snr": cmd_min_snr,
    "sweep": cmd_sweep,
    "optimize-phases": cmd_optimize_phases,
    "freqhop": cmd_freqhop,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def run_cli(argv=None, out=None, err=None, environ=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns, os.environ if environ is None else environ)
        if getattr(ns, "dump_config", False):
            out.write(cfg.to_json())
            return 0
        return COMMANDS[ns.command](cfg, out)
    except UsageError as exc:
        print(f"xorcow {ns.command}: error: {exc}", file=err)
        return 2
    except (BracketError, ArithmeticError, ValueError, OSError) as exc:
        print(f"xorcow {ns.command}: {exc}", file=err)
        return 1


def main():
    sys.exit(run_cli())
