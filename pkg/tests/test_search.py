import math
from dataclasses import replace

import pytest

from xorcow.analytic import PhaseSplit, xorcow_failure_prob
from xorcow.channel import SystemParams, any_fail, db_to_linear, link_failure_prob
from xorcow.search import (
    BracketError,
    FreqHopParams,
    freqhop_failure_prob,
    min_snr,
    optimize_freqhop_k,
    optimize_phase_split,
    simplex_grid,
    sweep_network_size,
    xorcow_evaluator,
)

PRINTER = SystemParams()


def step_at_3db(snr):
    return 1.0 if snr < db_to_linear(3.0) else 0.0


def test_step_evaluator_threshold():
    res = min_snr(0.5, step_at_3db)
    assert 3.0 <= res.snr_db <= 3.0 + 0.01
    assert res.achieved_pfail == 0.0


def test_bisection_postcondition_on_smooth_evaluator():
    ev = xorcow_evaluator(SystemParams(n=8))
    for target in (1e-3, 1e-6, 1e-9):
        res = min_snr(target, ev)
        assert ev(db_to_linear(res.snr_db)) <= target
        assert ev(db_to_linear(res.snr_db - 0.01)) > target
        assert res.achieved_pfail == ev(db_to_linear(res.snr_db))


@pytest.mark.parametrize("coarse", [0.5, 0.1, 0.04])
def test_finer_resolution_never_worse_than_coarse_step(coarse):
    ev = xorcow_evaluator(SystemParams(n=12))
    a = min_snr(1e-9, ev, resolution_db=coarse).snr_db
    b = min_snr(1e-9, ev, resolution_db=coarse / 7).snr_db
    assert b <= a + coarse


def test_bracket_error_reports_endpoints():
    with pytest.raises(BracketError) as info:
        min_snr(1e-9, lambda snr: 0.5)
    err = info.value
    assert err.f_lo == 0.5 and err.f_hi == 0.5 and err.lo_db == -10.0 and err.hi_db == 60.0
    assert "0.5" in str(err)
    with pytest.raises(BracketError):
        min_snr(0.5, lambda snr: 0.0)


def test_min_snr_argument_checks():
    with pytest.raises(ValueError):
        min_snr(2.0, step_at_3db)
    with pytest.raises(ValueError):
        min_snr(0.5, step_at_3db, lo_db=5, hi_db=0)
    with pytest.raises(ValueError):
        min_snr(0.5, lambda snr: math.nan)


def test_headline_min_snr():
    res = min_snr(1e-9, xorcow_evaluator(PRINTER, PhaseSplit.equal(), "fixed"))
    assert res.snr_db <= 2.0


# ---------------------------------------------------------------- frequency hopping

def test_freqhop_single_channel_is_plain_tdma():
    p = SystemParams(n=7, snr=3.0)
    hop = link_failure_prob(2 * 7 * 160 / 2e-3, 20e6, 3.0)
    assert freqhop_failure_prob(p, 1) == pytest.approx(any_fail(14, hop), rel=1e-15)


def test_freqhop_reference_value():
    # independent 40-digit evaluation of the same model
    v = freqhop_failure_prob(SystemParams(n=5, snr=db_to_linear(5.0)), 20)
    assert v == pytest.approx(2.5096852532020995363e-13, rel=1e-12)


def test_freqhop_perfect_links():
    assert freqhop_failure_prob(SystemParams(n=5, snr=math.inf), 12) == 0.0


def test_freqhop_monotone_in_n_and_m():
    for k in (1, 8, 30):
        by_n = [freqhop_failure_prob(SystemParams(n=n, snr=5.0), k) for n in (1, 3, 10, 30)]
        by_m = [freqhop_failure_prob(SystemParams(n=5, m_bits=m, snr=5.0), k) for m in (80, 160, 480)]
        assert by_n == sorted(by_n) and by_m == sorted(by_m)


def test_freqhop_has_interior_optimum_in_k():
    p = SystemParams(n=5, snr=db_to_linear(5.0))
    vals = [freqhop_failure_prob(p, k) for k in range(1, 65)]
    best = vals.index(min(vals))
    assert 0 < best < 63


def test_freqhop_params_bounds():
    hop = FreqHopParams(4)
    assert hop.sub_bandwidth(PRINTER) == 5e6
    with pytest.raises(ValueError):
        FreqHopParams(0)
    with pytest.raises(ValueError):
        FreqHopParams(65)
    with pytest.raises(ValueError):
        freqhop_failure_prob(PRINTER, 0)


def test_freqhop_single_choice():
    assert optimize_freqhop_k(SystemParams(n=5), 1e-3, k_max=1).k == 1


def test_freqhop_argmin_with_smallest_tie():
    p = SystemParams(n=5)
    best = optimize_freqhop_k(p, 1e-9, k_max=40)
    scan = []
    for k in range(1, 41):
        try:
            scan.append(min_snr(1e-9, lambda s, k=k: freqhop_failure_prob(replace(p, snr=s), k)).snr_db)
        except BracketError:
            scan.append(math.inf)
    assert best.snr_db == min(scan)
    assert best.k == scan.index(min(scan)) + 1


def test_freqhop_no_feasible_k():
    with pytest.raises(BracketError):
        optimize_freqhop_k(SystemParams(n=5), 1e-9, k_max=3, hi_db=-5.0)


# ---------------------------------------------------------------- phase split

def test_simplex_grid_interior():
    grid = simplex_grid(0.05)
    assert len(grid) == 171
    assert all(min(g.f_D, g.f_U, g.f_X) > 0.04 for g in grid)
    with pytest.raises(ValueError):
        simplex_grid(0.3)


@pytest.mark.parametrize("n,m", [(5, 160), (20, 160), (10, 480)])
@pytest.mark.parametrize("schedule", ["fixed", "flexible"])
def test_optimized_split_never_worse(n, m, schedule):
    p = SystemParams(n=n, m_bits=m)
    choice = optimize_phase_split(p, 1e-9, schedule)
    equal = min_snr(1e-9, xorcow_evaluator(p, None, schedule)).snr_db
    assert choice.snr_db <= equal
    assert xorcow_failure_prob(replace(p, snr=db_to_linear(choice.snr_db)), choice.split, schedule) <= 1e-9


def test_single_node_optimum_uses_two_long_phases():
    # one link succeeds iff it carries two of three phases, so the best split starves one phase
    choice = optimize_phase_split(SystemParams(n=1), 1e-3, "fixed")
    fs = sorted((choice.split.f_D, choice.split.f_U, choice.split.f_X))
    assert fs[0] < 0.05 and fs[1] > 0.45
    equal = min_snr(1e-3, xorcow_evaluator(SystemParams(n=1))).snr_db
    assert choice.snr_db < equal - 1.0


# ---------------------------------------------------------------- sweep

def test_sweep_rows_and_determinism():
    kw = dict(n_values=[2, 5, 10, 30], template=PRINTER, schemes=["xorcow-fixed", "freqhop", "occupycow2"],
              target=1e-9, m_values=[160, 480])
    a = sweep_network_size(**kw)
    b = sweep_network_size(**kw, workers=4)
    assert a == b
    assert [(r.m_bits, r.scheme, r.n) for r in a] == [
        (m, s, n) for m in (160, 480) for s in kw["schemes"] for n in kw["n_values"]]
    by = {(r.scheme, r.m_bits, r.n): r for r in a}
    assert by["xorcow-fixed", 160, 30].min_snr_db <= 2.0
    for s in kw["schemes"]:
        for n in kw["n_values"]:
            assert by[s, 480, n].min_snr_db >= by[s, 160, n].min_snr_db
    assert by["freqhop", 160, 5].aux.isdigit()


def test_sweep_records_bracket_failure():
    rows = sweep_network_size([1, 3], PRINTER, ["xorcow-fixed"], 1e-9)
    assert rows[0].status == "bracket-failure" and math.isnan(rows[0].min_snr_db)
    assert rows[1].status == "ok"


def test_hockeystick_descends_over_small_n():
    rows = sweep_network_size(list(range(1, 11)), PRINTER, ["xorcow-fixed"], 1e-9, hi_db=100.0)
    snrs = [r.min_snr_db for r in rows]
    assert all(r.status == "ok" for r in rows)
    assert all(b < a for a, b in zip(snrs, snrs[1:]))


def test_sweep_input_checks():
    with pytest.raises(ValueError):
        sweep_network_size([], PRINTER, ["xorcow-fixed"], 1e-9)
    with pytest.raises(ValueError):
        sweep_network_size([3], PRINTER, ["smoke-signals"], 1e-9)
