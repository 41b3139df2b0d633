"""Generalized covariance intersection of second-order GMB densities.

Fusing ``a`` (reference node) with ``b`` enumerates, for every index set ``I``
of ``a``, the injective fusion maps ``tau: I -> indices of b``. A map is
scored by

    w(I, tau) = w_a(I)**w1 * w_b(tau(I))**w2 * prod_(i in I) eta(p_a^i, p_b^tau(i))

with ``eta(p, q) = int p**w1 q**w2 dx``; each fused track density is the
normalized integrand. Densities of a second-order GMB depend on the index set
they belong to, so ``p_b^tau(i)`` is read from the hypothesis ``tau(I)`` of
``b``. Enumeration is done per pair of equally sized index sets with Murty's
algorithm on ``-log eta`` and stops once the remaining maps cannot reach the
truncation threshold. All weights are handled in the log domain.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .approx import to_sogmb
from .assignment import iter_murty
from .densities import GmbDensity, GmbHypothesis
from .errors import DegenerateFusionError, InvalidParameterError
from .gaussian import _fuse_mixtures, cross_log_kernel


@dataclass(frozen=True)
class FusionWeights:
    first: float = 0.5
    second: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.first < 1.0 and 0.0 < self.second < 1.0):
            raise InvalidParameterError("fusion weights must lie in (0, 1)")
        if abs(self.first + self.second - 1.0) > 1e-12:
            raise InvalidParameterError(f"fusion weights sum to {self.first + self.second}, not 1")

    @classmethod
    def of(cls, first):
        return cls(first, 1.0 - first)

    def swapped(self):
        return FusionWeights(self.second, self.first)


@dataclass(frozen=True)
class FusionMap:
    """Injective map from ``domain`` (an index set of the reference node) onto ``image``."""

    domain: tuple
    image: tuple

    def __post_init__(self):
        if len(self.domain) != len(self.image):
            raise InvalidParameterError("domain and image differ in size")
        if len(set(self.image)) != len(self.image):
            raise InvalidParameterError(f"fusion map is not injective: {self.image}")
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "image", tuple(self.image))

    def __call__(self, index):
        return self.image[self.domain.index(index)]

    def as_dict(self):
        return dict(zip(self.domain, self.image))


def enumerate_fusion_maps(indices, codomain):
    """All injective maps from ``indices`` into ``codomain``; empty when ``|indices| > |codomain|``."""
    domain = tuple(sorted(indices))
    return [FusionMap(domain, image) for image in itertools.permutations(sorted(codomain), len(domain))]


class _CrossTable:
    """``log eta`` between every track density of ``a`` and every track density of ``b``."""

    def __init__(self, a, b, omega):
        self.omega = omega
        self.mix_a, self.rows_a = self._collect(a)
        self.mix_b, self.rows_b = self._collect(b)
        ga, ia = self._gaussians(self.mix_a)
        gb, ib = self._gaussians(self.mix_b)
        if len(ga[0]) and len(gb[0]):
            log_k = cross_log_kernel(ga[0], ga[1], gb[0], gb[1], omega.first, omega.second)
            shift = log_k.max()
            A = self._powered(self.mix_a, ia, len(ga[0]), omega.first)
            B = self._powered(self.mix_b, ib, len(gb[0]), omega.second)
            with np.errstate(divide="ignore"):
                self.log_eta = np.log(A @ np.exp(log_k - shift) @ B.T) + shift
        else:
            self.log_eta = np.zeros((len(self.mix_a), len(self.mix_b)))
        self.best_a = self.log_eta.max(axis=1, initial=-np.inf)
        self.best_b = self.log_eta.max(axis=0, initial=-np.inf)

    @staticmethod
    def _collect(d):
        mixtures, position, rows = [], {}, []
        for h in d.hypotheses:
            idx = []
            for mix in h.densities:
                if id(mix) not in position:
                    position[id(mix)] = len(mixtures)
                    mixtures.append(mix)
                idx.append(position[id(mix)])
            rows.append(np.array(idx, dtype=int))
        return mixtures, rows

    @staticmethod
    def _gaussians(mixtures):
        table, index, owner = {}, [], []
        means, covs = [], []
        for mix in mixtures:
            idx = []
            for m, P in zip(mix.means, mix.covs):
                key = m.tobytes() + P.tobytes()
                if key not in table:
                    table[key] = len(means)
                    means.append(m)
                    covs.append(P)
                idx.append(table[key])
            index.append(idx)
        return (np.array(means), np.array(covs)), index

    @staticmethod
    def _powered(mixtures, index, n, omega):
        out = np.zeros((len(mixtures), n))
        for r, (mix, idx) in enumerate(zip(mixtures, index)):
            np.add.at(out[r], idx, mix.weights ** omega)
        return out


def _weights(omega):
    return FusionWeights() if omega is None else omega


def _ranked_maps(table, a, b, omega, threshold, max_hypotheses, k_maps):
    """Fused candidates ``(log_weight, ia, ib, columns)``, truncated."""
    w1, w2 = omega.first, omega.second
    with np.errstate(divide="ignore"):
        log_wa = np.log([h.weight for h in a.hypotheses])
        log_wb = np.log([h.weight for h in b.hypotheses])
    by_size = defaultdict(list)
    for jb, h in enumerate(b.hypotheses):
        by_size[len(h)].append(jb)

    pairs = []
    for ia, ha in enumerate(a.hypotheses):
        ra = table.rows_a[ia]
        bound_a = table.best_a[ra].sum()
        for jb in by_size.get(len(ha), ()):
            rb = table.rows_b[jb]
            bound = w1 * log_wa[ia] + w2 * log_wb[jb] + min(bound_a, table.best_b[rb].sum())
            if bound > -np.inf:
                pairs.append((bound, ia, jb))
    pairs.sort(key=lambda p: -p[0])

    log_threshold = math.log(threshold) if threshold > 0 else -np.inf
    global_cap = max_hypotheses is not None and (k_maps is None or k_maps >= max_hypotheses)
    top = []  # min-heap of accepted log weights, used only when the global cap is exact
    best = -np.inf
    accepted = []
    per_a = defaultdict(list)  # min-heaps of log weights per reference hypothesis

    def cutoff(ia):
        cut = best + log_threshold
        if global_cap and len(top) >= max_hypotheses:
            cut = max(cut, top[0])
        if k_maps is not None and len(per_a[ia]) >= k_maps:
            cut = max(cut, per_a[ia][0])
        return cut

    for bound, ia, jb in pairs:
        if bound < best + log_threshold:
            break
        if global_cap and len(top) >= max_hypotheses and bound <= top[0]:
            break
        if bound <= cutoff(ia):
            continue
        base = w1 * log_wa[ia] + w2 * log_wb[jb]
        sub = table.log_eta[np.ix_(table.rows_a[ia], table.rows_b[jb])]
        for cols, cost in iter_murty(-sub):
            lw = base - cost
            if lw <= cutoff(ia) or lw == -np.inf:
                break
            accepted.append((lw, ia, jb, cols))
            best = max(best, lw)
            if global_cap:
                if len(top) < max_hypotheses:
                    heapq.heappush(top, lw)
                else:
                    heapq.heappushpop(top, lw)
            if k_maps is not None:
                if len(per_a[ia]) < k_maps:
                    heapq.heappush(per_a[ia], lw)
                else:
                    heapq.heappushpop(per_a[ia], lw)

    if not accepted:
        return []
    accepted = [c for c in accepted if c[0] >= best + log_threshold]
    if k_maps is not None:
        grouped = defaultdict(list)
        for c in accepted:
            grouped[c[1]].append(c)
        accepted = [c for g in grouped.values() for c in sorted(g, key=lambda c: -c[0])[:k_maps]]
    accepted.sort(key=lambda c: -c[0])
    if max_hypotheses is not None:
        accepted = accepted[:max_hypotheses]
    return accepted


def k_best_fusion_maps(indices, a, b, omega=None, k=1):
    """The ``k`` highest-weight fusion maps for index set ``indices`` of ``a``.

    Returns ``[(FusionMap, unnormalized_weight), ...]`` in descending weight;
    maps of zero weight are never returned. ``k=None`` ranks every map.
    """
    omega = _weights(omega)
    if k is not None and k < 1:
        raise InvalidParameterError("k must be at least 1")
    table = _CrossTable(a, b, omega)
    key = tuple(sorted(indices))
    ia = next(i for i, h in enumerate(a.hypotheses) if h.indices == key)
    ha = a.hypotheses[ia]
    w1, w2 = omega.first, omega.second
    results = []
    for jb, hb in enumerate(b.hypotheses):
        if len(hb) != len(ha) or hb.weight <= 0 or ha.weight <= 0:
            continue
        base = w1 * math.log(ha.weight) + w2 * math.log(hb.weight)
        sub = table.log_eta[np.ix_(table.rows_a[ia], table.rows_b[jb])]
        for cols, cost in itertools.islice(iter_murty(-sub), k):
            if base - cost == -np.inf:
                break
            results.append((base - cost, FusionMap(ha.indices, tuple(hb.indices[c] for c in cols))))
    results.sort(key=lambda r: -r[0])
    return [(m, math.exp(lw)) for lw, m in (results if k is None else results[:k])]


def fuse_pair(a, b, omega=None, k_maps=None, max_hypotheses=100, threshold=1e-6):
    """GCI fusion of two SO-GMB densities into a GMB density.

    ``a`` is the reference node: output index sets are index sets of ``a`` and
    each retained fusion map becomes one history ``phi``. At most ``k_maps``
    maps are kept per index set of ``a``, at most ``max_hypotheses`` overall,
    and maps lighter than ``threshold`` times the heaviest are discarded
    (``None``/``0`` disable the respective truncation). Retained weights are
    renormalized.
    """
    omega = _weights(omega)
    table = _CrossTable(a, b, omega)
    accepted = _ranked_maps(table, a, b, omega, threshold, max_hypotheses, k_maps)
    if not accepted:
        raise DegenerateFusionError(
            "every fusion weight vanished; reference hypotheses: "
            + ", ".join(str(h.indices) for h in a.hypotheses[:5]))
    log_w = np.array([c[0] for c in accepted])
    weights = np.exp(log_w - logsumexp(log_w))

    fused_cache = {}

    def fused(ra, rb):
        key = (ra, rb)
        if key not in fused_cache:
            fused_cache[key] = _fuse_mixtures(table.mix_a[ra], table.mix_b[rb], omega.first, omega.second)[1]
        return fused_cache[key]

    hyps = []
    for phi, ((_, ia, jb, cols), w) in enumerate(zip(accepted, weights)):
        ha = a.hypotheses[ia]
        ra, rb = table.rows_a[ia], table.rows_b[jb]
        dens = tuple(fused(ra[k], rb[c]) for k, c in enumerate(cols))
        hyps.append(GmbHypothesis(ha.indices, phi, w, dens))
    return GmbDensity(tuple(hyps))


def default_schedule(n_nodes):
    """Sequential weights giving every node the same share ``1/n_nodes``."""
    return [FusionWeights.of(k / (k + 1.0)) for k in range(1, n_nodes)]


def fuse_sequential(posteriors, schedule=None, reference=0, max_components=None, **kwargs):
    """Left fold of ``fuse_pair`` over SO-GMB posteriors.

    Each intermediate GMB is turned back into SO-GMB form before the next
    fusion. ``reference`` selects the node whose index space is kept; the
    remaining nodes follow in listing order. Extra keyword arguments go to
    ``fuse_pair``.
    """
    posteriors = list(posteriors)
    if len(posteriors) < 2:
        raise InvalidParameterError("sequential fusion needs at least two posteriors")
    order = [reference] + [i for i in range(len(posteriors)) if i != reference]
    schedule = default_schedule(len(posteriors)) if schedule is None else list(schedule)
    if len(schedule) != len(posteriors) - 1:
        raise InvalidParameterError("one pair of fusion weights per fusion step is required")
    current = posteriors[order[0]]
    fused = None
    for step, (node, omega) in enumerate(zip(order[1:], schedule)):
        if fused is not None:
            current = to_sogmb(fused, max_components)
        try:
            fused = fuse_pair(current, posteriors[node], omega, **kwargs)
        except DegenerateFusionError as exc:
            raise DegenerateFusionError(f"fusing node {node} (step {step + 1}): {exc}") from exc
    return fused


def extract_map(d):
    """MAP estimate of an unlabeled GMB/SO-GMB: best hypothesis of the most likely size.

    Returns the track means as an (n, dim) array.
    """
    rho = np.zeros(max(len(h) for h in d.hypotheses) + 1)
    for h in d.hypotheses:
        rho[len(h)] += h.weight
    n_hat = int(np.argmax(rho))
    best = next(h for h in d.hypotheses if len(h) == n_hat)
    if n_hat == 0:
        dim = next((m.dim for h in d.hypotheses for m in h.densities), 4)
        return np.empty((0, dim))
    return np.array([mix.mean() for mix in best.densities])


__all__ = [
    "FusionMap", "FusionWeights", "enumerate_fusion_maps", "k_best_fusion_maps",
    "fuse_pair", "fuse_sequential", "default_schedule", "extract_map",
]
