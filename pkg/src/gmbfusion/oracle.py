"""Brute-force references for tests.

A ``GridDensity`` tabulates a set density on a 1-D grid: for every
cardinality ``n <= n_max`` it stores ``pi({x_1, ..., x_n})`` on the n-fold
product grid, as a symmetric array of shape ``(G,) * n``. Set integrals,
cardinality, PHD and GCI fusion are then plain sums over these arrays, with
no mixture algebra at all. The cost grows as ``G ** n_max``, so this is only
for small test fixtures.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFusionError, InvalidParameterError, TruncationError


@dataclass(frozen=True)
class GridDensity:
    points: np.ndarray
    values: tuple  # values[n] has shape (len(points),) * n; values[0] is a 0-d array

    @property
    def spacing(self):
        return float(self.points[1] - self.points[0])

    @property
    def n_max(self):
        return len(self.values) - 1

    def term_integrals(self):
        """``(1/n!) * integral of pi({x_1..x_n})`` per n, i.e. the cardinality distribution."""
        dx = self.spacing
        return np.array([float(v.sum()) * dx ** n / math.factorial(n) for n, v in enumerate(self.values)])

    def set_integral(self):
        return float(self.term_integrals().sum())

    def cardinality(self):
        return self.term_integrals()

    def phd(self):
        """PHD on the grid: ``sum_n 1/(n-1)! * integral of pi({x, x_2..x_n}) dx_2..dx_n``."""
        dx = self.spacing
        v = np.zeros(len(self.points))
        for n in range(1, len(self.values)):
            arr = self.values[n]
            v += arr.reshape(len(self.points), -1).sum(axis=1) * dx ** (n - 1) / math.factorial(n - 1)
        return v

    def normalized(self):
        total = self.set_integral()
        if not total > 0:
            raise DegenerateFusionError("set integral is zero")
        return GridDensity(self.points, tuple(v / total for v in self.values))


def grid(lo, hi, n_points=200):
    return np.linspace(lo, hi, n_points)


def _pdf_on(mix, points):
    return np.asarray(mix.pdf(points[:, None]), dtype=float).reshape(len(points))


def symmetrized_product(factors):
    """``sum over permutations sigma of prod_k f_sigma(k)(x_k)`` as an n-fold array."""
    n = len(factors)
    if n == 0:
        return np.array(1.0)
    out = 0.0
    for perm in itertools.permutations(range(n)):
        term = factors[perm[0]]
        for k in perm[1:]:
            term = np.multiply.outer(term, factors[k])
        out = out + term
    return out


def gridize(d, points, n_max=3):
    """Tabulate a GMB or SO-GMB density of 1-D tracks by literal term expansion.

    Every hypothesis contributes its weight times the symmetrized product of
    its track densities to the array of its cardinality.
    """
    if n_max > 3:
        raise InvalidParameterError("the grid oracle holds at most three objects")
    points = np.asarray(points, dtype=float)
    values = [np.zeros((len(points),) * n) for n in range(n_max + 1)]
    values[0] = np.array(0.0)
    for h in d.hypotheses:
        n = len(h.indices)
        if n > n_max:
            if h.weight > 0:
                raise TruncationError(f"hypothesis {h.indices} has {n} objects; the grid holds {n_max}")
            continue
        factors = [_pdf_on(mix, points) for mix in h.densities]
        values[n] = values[n] + h.weight * symmetrized_product(factors)
    return GridDensity(points, tuple(values))


def exact_gci(g1, g2, omega1=0.5, omega2=None):
    """Normalized pointwise ``pi1 ** omega1 * pi2 ** omega2`` on a shared grid.

    ``omega2`` defaults to ``1 - omega1``; weights may sit on the boundary
    (``omega2 = 0`` returns the normalized ``g1``).
    """
    omega2 = 1.0 - omega1 if omega2 is None else omega2
    if omega1 < 0 or omega2 < 0 or abs(omega1 + omega2 - 1.0) > 1e-12:
        raise InvalidParameterError("oracle weights must be nonnegative and sum to 1")
    if len(g1.points) != len(g2.points) or not np.array_equal(g1.points, g2.points):
        raise InvalidParameterError("densities live on different grids")
    n_max = min(g1.n_max, g2.n_max)
    values = []
    for n in range(n_max + 1):
        a, b = g1.values[n], g2.values[n]
        with np.errstate(divide="ignore", invalid="ignore"):
            fa = np.where(a > 0, a ** omega1, 0.0) if omega1 > 0 else np.ones_like(a)
            fb = np.where(b > 0, b ** omega2, 0.0) if omega2 > 0 else np.ones_like(b)
        values.append(fa * fb)
    fused = GridDensity(g1.points, tuple(values))
    if not fused.set_integral() > 0:
        raise DegenerateFusionError("the fused set density integrates to zero")
    return fused.normalized()


def l1_gap(g1, g2):
    """Set-integral L1 distance between two grid densities with the same grid."""
    dx = g1.spacing
    n_max = min(g1.n_max, g2.n_max)
    return float(sum(np.abs(g1.values[n] - g2.values[n]).sum() * dx ** n / math.factorial(n)
                     for n in range(n_max + 1)))


def grid_moments(values, points):
    """Mass, mean and variance of a nonnegative 1-D grid function."""
    dx = points[1] - points[0]
    mass = values.sum() * dx
    mean = (values * points).sum() * dx / mass
    var = (values * (points - mean) ** 2).sum() * dx / mass
    return float(mass), float(mean), float(var)


# --- assignments ------------------------------------------------------------

def all_assignments(cost):
    """Every complete row-to-column assignment of finite cost, cheapest first.

    Returns ``[(columns, total), ...]``; ties keep lexicographic order.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    out = []
    for cols in itertools.permutations(range(n_cols), n_rows):
        total = float(sum(cost[i, j] for i, j in enumerate(cols)))
        if np.isfinite(total):
            out.append((np.array(cols, dtype=int), total))
    out.sort(key=lambda r: r[1])
    return out


def brute_force_ospa(X, Y, cutoff=200.0, order=2.0):
    """OSPA by enumerating every assignment of the smaller set into the larger."""
    X = np.asarray(X, dtype=float).reshape(-1, 2) if len(X) else np.empty((0, 2))
    Y = np.asarray(Y, dtype=float).reshape(-1, 2) if len(Y) else np.empty((0, 2))
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0
    best = math.inf
    for cols in itertools.permutations(range(n), m):
        total = sum(min(cutoff, float(np.linalg.norm(X[i] - Y[j]))) ** order for i, j in enumerate(cols))
        best = min(best, total)
    return min(((best + cutoff ** order * (n - m)) / n) ** (1.0 / order), cutoff)
