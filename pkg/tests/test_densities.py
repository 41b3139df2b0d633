import numpy as np
import pytest
from hypothesis import given, settings

from gmbfusion.densities import (GlmbComponent, GlmbDensity, dumps, expected_cardinality, gmb_cardinality, gmb_phd,
                                 inclusion, kronecker_delta, loads, sogmb_cardinality, sogmb_phd)
from gmbfusion.errors import InvalidDensityError

from conftest import gauss, gmb, gmb_densities, mixture, sogmb

PEAK = 0.3989422804014327


def test_delta_and_inclusion():
    assert kronecker_delta({1, 2}, {2, 1}) == 1
    assert kronecker_delta(np.array([1.0, 2.0]), np.array([1.0, 2.5])) == 0
    assert inclusion({1, 2, 3}, 2) == 1
    assert inclusion({1, 2, 3}, {2, 4}) == 0
    assert inclusion({1}, set()) == 1


def test_cardinality_single_hypothesis():
    g = gmb(((1, 2), 0, 1.0, (gauss(0.0), gauss(1.0))))
    np.testing.assert_array_equal(gmb_cardinality(g), [0, 0, 1])


def test_cardinality_sums_histories():
    g = gmb(((), 0, 0.4, ()), ((1,), 0, 0.35, (gauss(0.0),)), ((1,), 1, 0.25, (gauss(1.0),)))
    np.testing.assert_allclose(gmb_cardinality(g), [0.4, 0.6], atol=1e-15)


def test_cardinality_empty_only():
    np.testing.assert_array_equal(gmb_cardinality(gmb(((), 0, 1.0, ()))), [1.0])


def test_sogmb_cardinality_examples():
    np.testing.assert_array_equal(sogmb_cardinality(sogmb(((1,), 1.0, (gauss(0.0),)))), [0, 1])
    d = sogmb(((), 0.25, ()), ((1,), 0.25, (gauss(0.0),)), ((1, 2), 0.5, (gauss(0.0), gauss(3.0))))
    np.testing.assert_allclose(sogmb_cardinality(d), [0.25, 0.25, 0.5], atol=1e-15)


def test_phd_examples():
    p = gauss(0.0)
    assert gmb_phd(gmb(((1,), 0, 1.0, (p,))), np.array([0.0])) == pytest.approx(PEAK, rel=1e-12)
    x = np.linspace(-3, 3, 7)[:, None]
    np.testing.assert_allclose(gmb_phd(gmb(((1,), 0, 0.5, (p,)), ((2,), 0, 0.5, (p,))), x), p.pdf(x), rtol=1e-12)
    assert gmb_phd(gmb(((1, 2), 0, 1.0, (p, p))), np.array([0.0])) == pytest.approx(2 * PEAK, rel=1e-12)


def test_sogmb_phd_examples():
    p = gauss(0.0)
    assert sogmb_phd(sogmb(((1,), 1.0, (p,))), np.array([0.0])) == pytest.approx(PEAK, rel=1e-12)
    x = np.linspace(-3, 3, 7)[:, None]
    np.testing.assert_allclose(sogmb_phd(sogmb(((1,), 0.5, (p,)), ((2,), 0.5, (p,))), x), p.pdf(x), rtol=1e-12)
    assert sogmb_phd(sogmb(((1, 2), 1.0, (p, p))), np.array([0.0])) == pytest.approx(2 * PEAK, rel=1e-12)


@given(gmb_densities())
@settings(max_examples=40, deadline=None)
def test_phd_integrates_to_expected_cardinality(g):
    x = np.linspace(-25, 25, 5001)
    v = gmb_phd(g, x[:, None])
    integral = np.trapezoid(v, x)
    n_bar = expected_cardinality(gmb_cardinality(g))
    assert integral == pytest.approx(n_bar, rel=1e-3, abs=1e-12)


@given(gmb_densities())
@settings(max_examples=40, deadline=None)
def test_cardinality_is_a_distribution(g):
    rho = gmb_cardinality(g)
    assert np.all(rho >= 0)
    assert rho.sum() == pytest.approx(1.0, abs=1e-9)


def test_weights_must_sum_to_one():
    with pytest.raises(InvalidDensityError):
        gmb(((), 0, 0.5, ()), ((1,), 0, 0.4, (gauss(0.0),)))
    with pytest.raises(InvalidDensityError):
        sogmb(((1,), 1.2, (gauss(0.0),)), ((), -0.2, ()))


def test_duplicate_labels_rejected():
    with pytest.raises(InvalidDensityError):
        GlmbComponent(((1, 0), (1, 0)), (gauss(0.0), gauss(1.0)), 1.0)


def test_repeated_index_set_rejected():
    with pytest.raises(InvalidDensityError):
        sogmb(((1,), 0.5, (gauss(0.0),)), ((1,), 0.5, (gauss(1.0),)))


def test_unnormalized_track_density_detected():
    bad = mixture([0.5, 0.3], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(InvalidDensityError):
        gmb(((1,), 0, 1.0, (bad,))).validate()


def test_hypotheses_sorted_by_weight():
    g = gmb(((), 0, 0.2, ()), ((1,), 0, 0.5, (gauss(0.0),)), ((1,), 1, 0.3, (gauss(1.0),)))
    assert list(g.weights) == sorted(g.weights, reverse=True)


def _same(d1, d2):
    items1 = getattr(d1, "components", None) or d1.hypotheses
    items2 = getattr(d2, "components", None) or d2.hypotheses
    assert len(items1) == len(items2)
    for a, b in zip(items1, items2):
        assert a.weight == b.weight
        for m1, m2 in zip(a.densities, b.densities):
            np.testing.assert_array_equal(m1.means, m2.means)
            np.testing.assert_array_equal(m1.covs, m2.covs)
            np.testing.assert_array_equal(m1.weights, m2.weights)


@given(gmb_densities())
@settings(max_examples=20, deadline=None)
def test_gmb_serialization_round_trip(g):
    back = loads(dumps(g))
    _same(g, back)
    assert [h.indices for h in back.hypotheses] == [h.indices for h in g.hypotheses]
    assert [h.history for h in back.hypotheses] == [h.history for h in g.hypotheses]


def test_glmb_and_sogmb_round_trip():
    glmb = GlmbDensity((GlmbComponent(((1, 0), (3, 2)), (gauss([0.0, 1.0]), gauss([2.0, 3.0])), 0.75, 4),
                        GlmbComponent((), (), 0.25)))
    back = loads(dumps(glmb))
    _same(glmb, back)
    assert back.components[0].labels == ((1, 0), (3, 2))
    assert back.components[0].history == 4
    so = sogmb(((), 0.4, ()), ((2, 5), 0.6, (gauss(0.0), mixture([0.3, 0.7], [1.0, 2.0], [1.0, 0.5]))))
    _same(so, loads(dumps(so)))


def test_loads_rejects_unknown_type():
    with pytest.raises(InvalidDensityError):
        loads('{"type": "phd"}\n')
