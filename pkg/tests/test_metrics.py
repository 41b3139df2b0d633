import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmbfusion.errors import FilterDivergenceError, InvalidParameterError
from gmbfusion.metrics import (CSV_COLUMNS, OspaParams, RunResult, monte_carlo, ospa, read_summary_csv,
                               sample_stats, write_summary_csv)
from gmbfusion.oracle import brute_force_ospa

coords = st.floats(-300, 300, allow_nan=False)
point_sets = st.lists(st.tuples(coords, coords), max_size=5).map(lambda p: np.array(p, float).reshape(-1, 2))


def test_ospa_examples():
    X = np.array([[1.0, 2.0], [30.0, -4.0]])
    assert ospa(X, X) == 0.0
    assert ospa([], [[5.0, 5.0]]) == 200.0
    assert ospa([[0.0, 0.0]], [[300.0, 0.0]]) == 200.0
    assert ospa([], []) == 0.0


def test_ospa_hand_value():
    # one matched pair at distance 5 plus one unmatched point
    d = ospa([[0.0, 0.0]], [[3.0, 4.0], [1000.0, 0.0]], OspaParams(100.0, 2.0))
    assert d == pytest.approx(math.sqrt((25 + 100 ** 2) / 2))


def test_ospa_params():
    with pytest.raises(InvalidParameterError):
        OspaParams(0.0, 2.0)
    with pytest.raises(InvalidParameterError):
        OspaParams(200.0, 0.5)


@given(point_sets, point_sets)
@settings(max_examples=200, deadline=None)
def test_ospa_symmetric_and_bounded(X, Y):
    d = ospa(X, Y)
    assert d == ospa(Y, X)
    assert 0.0 <= d <= 200.0


@given(point_sets, point_sets, point_sets)
@settings(max_examples=300, deadline=None)
def test_ospa_triangle_inequality(X, Y, Z):
    assert ospa(X, Z) <= ospa(X, Y) + ospa(Y, Z) + 1e-9


@given(point_sets.filter(lambda p: len(p) <= 4), point_sets.filter(lambda p: len(p) <= 4),
       st.sampled_from([1.0, 2.0, 3.0]))
@settings(max_examples=200, deadline=None)
def test_ospa_matches_brute_force(X, Y, p):
    params = OspaParams(200.0, p)
    assert ospa(X, Y, params) == pytest.approx(brute_force_ospa(X, Y, params.cutoff, params.order),
                                               rel=1e-12, abs=1e-12)


def test_sample_stats():
    mean, std = sample_stats([[1.0], [3.0]])
    assert mean[0] == 2.0 and std[0] == pytest.approx(math.sqrt(2.0))
    mean, std = sample_stats([[4.0, 5.0]])
    np.testing.assert_array_equal(std, [0.0, 0.0])
    mean, std = sample_stats([[7.0, 7.0]] * 5)
    np.testing.assert_array_equal(mean, [7.0, 7.0])
    np.testing.assert_array_equal(std, [0.0, 0.0])


def _run(seed):
    if seed == 3:
        raise FilterDivergenceError("no hypothesis survived")
    v = np.full(4, float(seed))
    return RunResult({"a": v, "b": 2 * v}, {"a": v + 1, "b": v}, np.ones(4))


def test_monte_carlo_statistics_and_failures():
    s = monte_carlo(_run, [1, 2, 3, 5], [1, 2, 3, 4])
    assert s.n_runs == 3
    assert s.failures == [(3, "no hypothesis survived")]
    np.testing.assert_allclose(s.mean_ospa["a"], 8 / 3)
    np.testing.assert_allclose(s.std_ospa["b"], np.std([2, 4, 10], ddof=1))
    np.testing.assert_allclose(s.mean_card["a"], 8 / 3 + 1)
    assert s.time_averaged_ospa("b") == pytest.approx(16 / 3)


def test_monte_carlo_order_independent():
    a = monte_carlo(_run, [1, 2, 5], [1, 2, 3, 4])
    b = monte_carlo(_run, [5, 1, 2], [1, 2, 3, 4])
    for m in ("a", "b"):
        np.testing.assert_allclose(a.mean_ospa[m], b.mean_ospa[m], rtol=1e-15)
        np.testing.assert_allclose(a.std_card[m], b.std_card[m], rtol=1e-15)
    with pytest.raises(InvalidParameterError):
        monte_carlo(_run, [], [1])
    with pytest.raises(InvalidParameterError):
        monte_carlo(_run, [3], [1])


def test_summary_csv(tmp_path):
    s = monte_carlo(_run, [1, 2], [1, 2, 3, 4])
    path = tmp_path / "summary.csv"
    write_summary_csv(s, path)
    header, rows = read_summary_csv(path)
    assert tuple(header) == CSV_COLUMNS
    assert len(rows) == 8
    assert rows[1]["method"] == "b" and rows[1]["mean_ospa"] == 3.0
    assert rows[0]["std_ospa"] == pytest.approx(math.sqrt(0.5), abs=1e-6)
