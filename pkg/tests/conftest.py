import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from gmbfusion.densities import GmbDensity, GmbHypothesis, SoGmbDensity, SoGmbHypothesis
from gmbfusion.gaussian import GaussianMixture


def gauss(mean, var=1.0):
    """Single 1-D (scalar ``var``) or n-D (matrix ``var``) Gaussian."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    var = np.asarray(var, dtype=float)
    cov = var * np.eye(mean.size) if var.ndim == 0 else var
    return GaussianMixture.single(mean, cov)


def mixture(weights, means, variances):
    """1-D mixture from plain lists."""
    return GaussianMixture(np.array(weights, float), np.array(means, float)[:, None],
                           np.array(variances, float)[:, None, None])


def sogmb(*hyps):
    """SO-GMB from ``(indices, weight, densities)`` triples."""
    return SoGmbDensity(tuple(SoGmbHypothesis(tuple(i), w, tuple(d)) for i, w, d in hyps))


def gmb(*hyps):
    """GMB from ``(indices, history, weight, densities)`` tuples."""
    return GmbDensity(tuple(GmbHypothesis(tuple(i), phi, w, tuple(d)) for i, phi, w, d in hyps))


@st.composite
def mixtures_1d(draw, max_components=3):
    k = draw(st.integers(1, max_components))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    means = draw(st.lists(st.floats(-5, 5), min_size=k, max_size=k))
    variances = draw(st.lists(st.floats(0.2, 3.0), min_size=k, max_size=k))
    w = np.array(raw) / sum(raw)
    return mixture(w, means, variances)


@st.composite
def gmb_densities(draw, max_indices=4, max_histories=3, max_components=3):
    """Random valid GMB densities with small rational-ish weights."""
    n_idx = draw(st.integers(1, max_indices))
    n_hist = draw(st.integers(1, max_histories))
    index_sets = draw(st.lists(st.sets(st.integers(1, n_idx), max_size=n_idx).map(lambda s: tuple(sorted(s))),
                               min_size=1, max_size=5, unique=True))
    pairs = [(I, phi) for I in index_sets for phi in range(n_hist)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    raw = draw(st.lists(st.integers(1, 20), min_size=len(chosen), max_size=len(chosen)))
    total = sum(raw)
    hyps = []
    for (I, phi), r in zip(chosen, raw):
        dens = tuple(draw(mixtures_1d(max_components)) for _ in I)
        hyps.append((I, phi, r / total, dens))
    return gmb(*hyps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SPACING = 20.0  # index i of a separated fixture lives near SPACING * i


@st.composite
def separated_pairs(draw, max_size=2, n_locations=3):
    """Two single-Gaussian 1-D SO-GMBs with the same index sets and well separated tracks.

    Index ``i`` sits near ``SPACING * i`` on both sides, so any fusion map that
    does not send every index to itself has negligible weight.
    """
    candidates = [s for k in range(max_size + 1) for s in itertools.combinations(range(n_locations), k)]
    sets = draw(st.lists(st.sampled_from(candidates), min_size=1, max_size=4, unique=True))

    def side():
        raw = draw(st.lists(st.integers(1, 10), min_size=len(sets), max_size=len(sets)))
        hyps = []
        for I, r in zip(sets, raw):
            dens = [gauss(SPACING * i + draw(st.floats(-1, 1)), draw(st.floats(0.3, 1.0))) for i in I]
            hyps.append((I, r / sum(raw), dens))
        return sogmb(*hyps)

    return side(), side()


def region_mass(gd, indices, spacing=SPACING, half=None):
    """Mass of a grid density in the boxes around the locations of ``indices`` (a set term)."""
    half = spacing / 2 if half is None else half
    pts = gd.points
    n = len(indices)
    dx = gd.spacing
    if n == 0:
        return float(gd.values[0])
    masks = [np.abs(pts - spacing * i) < half for i in indices]
    box = masks[0]
    for m in masks[1:]:
        box = np.multiply.outer(box, m)
    # the symmetric array holds every ordering of the objects: n! boxes carry the same mass
    return float(gd.values[n][box].sum()) * dx ** n


def region_moments(gd, indices, k, spacing=SPACING):
    """Mean and variance of coordinate ``k`` within the box of ``indices``."""
    pts = gd.points
    n = len(indices)
    masks = [np.abs(pts - spacing * i) < spacing / 2 for i in indices]
    sub = gd.values[n][np.ix_(*masks)]
    axes = tuple(a for a in range(n) if a != k)
    marginal = sub.sum(axis=axes) if axes else sub
    x = pts[masks[k]]
    mass = marginal.sum()
    mean = (marginal * x).sum() / mass
    return float(mean), float((marginal * (x - mean) ** 2).sum() / mass)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
