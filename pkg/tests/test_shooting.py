import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiard_bvp import (BracketLost, ConstantForce, Interval, PolynomialForce, bisect_solution,
                          count_impacts, endpoint_map, enumerate_solutions, find_brackets,
                          rest_solution, scaling_escalation)
from billiard_bvp.shooting import Bracket, default_grid, write_shots_csv, write_solutions_csv

PUSHED = (Interval(0.125), ConstantForce(2.0))
FREE = (Interval(0.125), ConstantForce(0.0))
RAMP = (Interval(0.375), PolynomialForce.from_terms([(0, 1, (0,), 6.0)]))


def test_endpoint_map_at_rest_matches_closed_form():
    # x = t^2 up to sqrt(a), then a mirrored parabola.
    t1 = math.sqrt(0.125)
    s = 1 - t1
    shot = endpoint_map(*PUSHED, 0.0, 1.0)
    assert shot.endpoint == pytest.approx(0.125 - 2 * t1 * s + s * s, abs=1e-12)
    assert shot.impact_count == 1 and shot.completed


def test_free_flight_solutions_follow_the_fold_zeros():
    # Zeros of the folded line: |v| T = 2 a k.
    sols = enumerate_solutions(*FREE, 1.0, max_count=6)
    speeds = sorted(abs(s.v) for s in sols)
    assert np.allclose(speeds, [0.25, 0.25, 0.5, 0.5, 0.75, 0.75], atol=1e-9)
    assert {s.v > 0 for s in sols} == {True, False}
    assert all(s.residual <= 1e-8 for s in sols)


def test_pushed_solutions_in_band():
    sols = enumerate_solutions(*PUSHED, 1.0, max_count=50, v_range=(0.5, 2.5))
    vs = [s.v for s in sols]
    for known in (-0.8568072388, -1.7657933469, 0.778091183358):
        assert min(abs(v - known) for v in vs) <= 1e-8
    assert [abs(v) for v in vs] == sorted(abs(v) for v in vs)
    assert all(s.residual <= 1e-8 for s in sols)
    three = next(s for s in sols if abs(s.v + 0.8568) < 1e-3)
    assert three.impact_count == 3


def test_unbounded_search_starts_from_slow_solutions():
    sols = enumerate_solutions(*PUSHED, 1.0, max_count=3)
    assert [round(s.v, 6) for s in sols] == [-0.25, 0.778091, -0.856807]


def test_ramp_root():
    sols = enumerate_solutions(*RAMP, 1.0, max_count=5, v_range=(1.0, 2.0))
    root = [s for s in sols if abs(s.v + 1.218) <= 2e-3]
    assert len(root) == 1 and root[0].impact_count == 2


def test_find_brackets_signs_change_inside():
    scan = find_brackets(*PUSHED, 1.0, (0.5, 2.5), n_grid=400)
    assert len(scan) >= 14 and not scan.failed
    assert len(scan.shots) == 2 * 401
    for br in scan:
        assert (br.e_lo > 0) != (br.e_hi > 0)
        assert abs(br.v_hi - br.v_lo) <= 2.0 / 400 + 1e-12


def test_find_brackets_validates_range():
    with pytest.raises(ValueError):
        find_brackets(*PUSHED, 1.0, (2.0, 1.0))
    with pytest.raises(ValueError):
        find_brackets(*PUSHED, 1.0, (0.0, 1.0))


def test_default_grid_grows_with_range():
    table = Interval(0.125)
    assert default_grid(table, 1.0, 0.5, 2.5) >= 16
    assert default_grid(table, 1.0, 1.0, 100.0) > default_grid(table, 1.0, 1.0, 10.0)


def test_bisection_reaches_velocity_tolerance():
    sol = bisect_solution(*PUSHED, 1.0, Bracket(-0.86, -0.85, math.nan, math.nan))
    assert sol.v == pytest.approx(-0.8568072388, abs=1e-9)
    assert sol.residual <= 1e-8
    # The neighbours one tolerance away bracket the root.
    lo = endpoint_map(*PUSHED, sol.v - 2e-12, 1.0).endpoint
    hi = endpoint_map(*PUSHED, sol.v + 2e-12, 1.0).endpoint
    assert lo * hi <= 0 or min(abs(lo), abs(hi)) <= 1e-10


def test_bisection_rejects_brackets_without_sign_change():
    with pytest.raises(BracketLost):
        bisect_solution(*PUSHED, 1.0, (-0.84, -0.83))


def test_bisection_accepts_plain_tuples():
    sol = bisect_solution(*PUSHED, 1.0, (-1.77, -1.76))
    assert sol.impact_count == 7


def test_rest_solution_only_without_force():
    assert rest_solution(*FREE, 1.0) is not None
    assert rest_solution(*PUSHED, 1.0) is None


def test_escalation_scales_and_gains_impacts():
    v = -0.8568
    w = scaling_escalation(*PUSHED, 1.0, v, 2)
    assert w / v > 1
    assert count_impacts(*PUSHED, w, 1.0) >= count_impacts(*PUSHED, v, 1.0) + 2
    w4 = scaling_escalation(*PUSHED, 1.0, v, 4)
    assert count_impacts(*PUSHED, w4, 1.0) >= count_impacts(*PUSHED, v, 1.0) + 4


def test_escalation_argument_checks():
    with pytest.raises(ValueError):
        scaling_escalation(*PUSHED, 1.0, -0.8568, 3)
    with pytest.raises(ValueError):
        scaling_escalation(*PUSHED, 1.0, 0.0, 2)
    assert scaling_escalation(*PUSHED, 1.0, -0.8568, 0) == -0.8568


@settings(max_examples=25)
@given(st.floats(2.5, 12.0), st.sampled_from([-1, 1]))
def test_escalation_postcondition_property(speed, sign):
    v = sign * speed
    w = scaling_escalation(*PUSHED, 1.0, v, 2)
    assert np.sign(w) == np.sign(v)
    assert count_impacts(*PUSHED, w, 1.0) >= count_impacts(*PUSHED, v, 1.0) + 2


@settings(max_examples=30)
@given(st.floats(2.3, 6.0), st.sampled_from([-1, 1]))
def test_fast_shots_alternate_sides(speed, sign):
    shot = endpoint_map(*PUSHED, sign * speed, 1.0)
    sides = [imp.side for imp in shot.trajectory.impacts]
    assert shot.completed
    assert all(a == -b for a, b in zip(sides, sides[1:]))
    assert sides[0] == sign


def test_free_flight_is_symmetric_in_v():
    for v in np.linspace(0.1, 3.0, 13):
        assert endpoint_map(*FREE, v, 1.0).endpoint == pytest.approx(
            -endpoint_map(*FREE, -v, 1.0).endpoint, abs=1e-12)


def test_solution_csv_formats():
    sols = enumerate_solutions(*PUSHED, 1.0, max_count=2, v_range=(0.5, 1.0))
    buf = io.StringIO()
    write_solutions_csv(sols, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "v,residual,impact_count,impact_times"
    v, _, n, times = lines[1].split(",")
    assert float(v) == sols[0].v
    assert len(times.split(";")) == int(n)

    scan = find_brackets(*PUSHED, 1.0, (0.5, 1.0), n_grid=4)
    buf = io.StringIO()
    write_shots_csv(scan.shots, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "v,endpoint,impact_count,status"
    assert len(lines) == 1 + 10 and lines[1].endswith(",completed")


def test_max_count_must_be_positive():
    with pytest.raises(ValueError):
        enumerate_solutions(*PUSHED, 1.0, max_count=0)


def free_impact_count(v, a, T=1.0):
    """Wall hits of free flight in [-a, a] from 0: at times (2k + 1) a / |v| <= T."""
    return 0 if v == 0 else int((abs(v) * T / a + 1) // 2)


@settings(max_examples=40)
@given(st.floats(0.05, 8.0), st.sampled_from([-1, 1]))
def test_free_flight_impact_count_and_escalation(speed, sign):
    a = 0.125
    v = sign * speed
    # Stay clear of hits landing exactly on T.
    if abs((speed / a + 1) / 2 - round((speed / a + 1) / 2)) < 1e-6:
        return
    k = count_impacts(*FREE, v, 1.0)
    assert k == free_impact_count(v, a)
    if k:
        w = scaling_escalation(*FREE, 1.0, v, 2)
        assert count_impacts(*FREE, w, 1.0) >= k + 2


def test_impact_count_examples():
    assert count_impacts(*PUSHED, -0.8568, 1.0) == 3
    assert count_impacts(*PUSHED, -1.76579, 1.0) == 7
    assert count_impacts(*FREE, 0.0, 1.0) == 0


def test_pushed_brackets_on_coarse_grid():
    scan = find_brackets(*PUSHED, 1.0, (0.8, 3.0), n_grid=64, signs=(-1,))
    for root in (-0.8568072388, -1.7657933469):
        assert any(min(b.v_lo, b.v_hi) <= root <= max(b.v_lo, b.v_hi) for b in scan)


def test_ramp_bracket_on_coarse_grid():
    scan = find_brackets(*RAMP, 1.0, (1.0, 2.0), n_grid=64, signs=(-1,))
    assert any(min(b.v_lo, b.v_hi) <= -1.2173 <= max(b.v_lo, b.v_hi) for b in scan)


def test_escalation_from_three_to_seven_impacts():
    w = scaling_escalation(*PUSHED, 1.0, -0.8568, 4)
    assert count_impacts(*PUSHED, w, 1.0) >= 7
