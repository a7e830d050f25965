import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nashloj.nashfn import (BranchError, FoldError, NashBranch, branch_eval, branch_gradient, critical_value_scan,
                            degree_at)

CIRCLE = "y - x1^2 - x2^2"
NASH = "(y+1)^2 - 1 - x1^2 - x2^2"
AXES = "y - x1^2*x2^2"


@pytest.fixture(scope="module")
def nash():
    return NashBranch.from_text(NASH, 2)


def _residual(b, x, y):
    return abs(float(b.P.eval(tuple(x) + (y,))))


# -- evaluation examples --------------------------------------------------------

def test_explicit_branch_value():
    b = NashBranch.from_text(CIRCLE, 2, radius=2.0)
    assert branch_eval(b, (1, 1)) == 2.0


def test_nash_branch_values(nash):
    assert abs(branch_eval(nash, (0, 0))) < 1e-15
    assert abs(branch_eval(nash, (1, 0)) - (math.sqrt(2) - 1)) < 1e-12


def test_continuity_selects_positive_root():
    b = NashBranch.from_text("y^2 - x1", 1, seed_x=(1,), seed_y=1, radius=4)
    assert abs(branch_eval(b, (4,)) - 2.0) < 1e-12


def test_approximate_seed_is_polished():
    b = NashBranch.from_text("y^2 - x1", 1, seed_x=(1,), seed_y=1.05, radius=4)
    assert abs(b.seed_y - 1.0) < 1e-14


def test_outside_ball_raises(nash):
    with pytest.raises(ValueError):
        branch_eval(nash, (1, 1))


def test_fold_is_reported():
    # y^2 = x1 folds at x1 = 0; walking from x1 = 1 to x1 = -1 crosses it
    b = NashBranch.from_text("y^2 - x1", 1, seed_x=(1,), seed_y=1, radius=2)
    with pytest.raises(FoldError):
        branch_eval(b, (-0.5,))


def test_construction_errors():
    with pytest.raises(ValueError):
        NashBranch.from_text("x1^2 - 1", 1)
    with pytest.raises(BranchError):
        NashBranch.from_text("y^2 + 1 + x1^2", 1)


def test_vectorised_matches_pointwise(nash):
    rng = np.random.default_rng(1)
    X = nash.region.uniform(50, rng)
    Y = nash.values(X)
    for x, y in zip(X, Y):
        assert abs(y - branch_eval(nash, x)) < 1e-12


# -- gradient examples ----------------------------------------------------------

def test_gradient_examples(nash):
    b = NashBranch.from_text(CIRCLE, 2, radius=2.0)
    gv = branch_gradient(b, (1, 1))
    assert np.allclose(gv.grad, [2, 2]) and gv.norm_sq == 8
    assert np.allclose(branch_gradient(nash, (0, 0)).grad, [0, 0], atol=1e-15)
    gv = branch_gradient(nash, (0.75, 0))
    assert np.allclose(gv.grad, [0.6, 0], atol=1e-12)
    assert abs(gv.norm_sq - 0.36) < 1e-12


def test_degree_examples(nash):
    assert degree_at(NashBranch.from_text(CIRCLE, 2)) == 2
    assert degree_at(nash) == 2
    assert degree_at(NashBranch.from_text(AXES, 2)) == 4


# -- properties ---------------------------------------------------------------------

point = st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))


@settings(max_examples=60, deadline=None)
@given(point)
def test_residual_bound(x):
    b = NashBranch.from_text(NASH, 2)
    y = branch_eval(b, x)
    assert _residual(b, x, y) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(point)
def test_finite_difference_gradient(x):
    b = NashBranch.from_text(NASH, 2)
    h = 1e-5
    g = branch_gradient(b, x).grad
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (branch_eval(b, np.add(x, e)) - branch_eval(b, np.subtract(x, e))) / (2 * h)
        assert abs(fd - g[i]) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(point, point)
def test_path_independence(x, w):
    b = NashBranch.from_text(NASH, 2)
    direct = b.continue_root(b.seed_x, b.seed_y, x)
    mid = b.continue_root(b.seed_x, b.seed_y, w)
    via = b.continue_root(w, mid, x)
    assert abs(direct - via) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(point)
def test_norm_sq_consistent(x):
    gv = branch_gradient(NashBranch.from_text(NASH, 2), x)
    assert abs(gv.norm_sq - float(np.sum(gv.grad ** 2))) <= 1e-12 * max(gv.norm_sq, 1e-300)


def test_second_derivatives_match_finite_differences(nash):
    x = np.array([0.3, -0.2])
    _, g, H = nash.jet_at(x, order=2)
    h = 1e-5
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (nash.jet_at(x + e)[1] - nash.jet_at(x - e)[1]) / (2 * h)
        assert np.allclose(fd, H[:, j], atol=1e-7)


# -- critical value scan ---------------------------------------------------------------

def test_scan_circle():
    scan = critical_value_scan(NashBranch.from_text(CIRCLE, 2))
    assert all(abs(v) < 1e-6 for v in scan.critical_values)
    assert scan.epsilon == 0.5


def test_scan_axes():
    scan = critical_value_scan(NashBranch.from_text(AXES, 2))
    assert all(abs(v) < 1e-6 for v in scan.critical_values)
    assert scan.epsilon == 0.5


def test_scan_finds_shifted_critical_value():
    # (x1^2 - 1)^2 has critical values 0 (at x1 = +-1) and 1 (at x1 = 0)
    b = NashBranch.from_function("(x1^2 - 1)^2", 1, radius=1.5)
    scan = critical_value_scan(b, value_window=(-2, 2))
    # brute-force grid oracle for the critical values
    xs = np.linspace(-1.5, 1.5, 30001)
    d = 4 * xs * (xs ** 2 - 1)
    crit = sorted({round(float((x ** 2 - 1) ** 2), 6) for x, a, c in zip(xs[1:-1], d[:-2], d[2:]) if a * c <= 0})
    assert crit == [0.0, 1.0]
    assert sorted(round(v, 6) for v in scan.critical_values) == crit
    assert abs(scan.epsilon - 0.5) < 1e-6
    with pytest.raises(ValueError):
        critical_value_scan(b, value_window=(0.1, 1))


def test_json_round_trip(tmp_path, nash):
    p = tmp_path / "b.json"
    import json

    p.write_text(json.dumps(nash.to_dict()))
    b2 = NashBranch.from_json(p)
    assert b2.P == nash.P and b2.seed_x == nash.seed_x and b2.radius == nash.radius
