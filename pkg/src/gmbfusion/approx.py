"""Conversions between multi-object density families.

``strip_labels``  GLMB -> GMB (labels replaced by integer indices)
``to_sogmb``      GMB -> second-order GMB: association histories summed out,
                  which keeps both the PHD and the cardinality distribution
``to_fogmb``      GMB -> multi-Bernoulli with the same PHD, expanded into
                  SO-GMB hypotheses so that the same fusion code applies
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .assignment import k_best_subsets
from .densities import GmbDensity, GmbHypothesis, SoGmbDensity, SoGmbHypothesis
from .errors import InvalidDensityError, InvalidMomentError
from .gaussian import GaussianMixture, deduplicate, reduce_mixture


def label_index(g):
    """Fixed label -> index bijection: position in sorted label order."""
    return {lab: i for i, lab in enumerate(g.labels)}


def strip_labels(g, index=None):
    """Replace every label by its index; the component history becomes ``phi``."""
    index = label_index(g) if index is None else index
    hyps = []
    for comp in g.components:
        if len(set(comp.labels)) != len(comp.labels):
            raise InvalidDensityError(f"duplicate labels in component {comp.labels}")
        hyps.append(GmbHypothesis(tuple(index[lab] for lab in comp.labels), comp.history,
                                  comp.weight, comp.densities))
    return GmbDensity(tuple(hyps))


def _weighted_mixture(pairs, max_components):
    """Normalized mixture ``sum_k a_k p_k`` of (a_k, p_k) pairs; shared densities are merged."""
    by_id = {}
    for a, mix in pairs:
        key = id(mix)
        by_id[key] = (by_id[key][0] + a, mix) if key in by_id else (a, mix)
    if len(by_id) == 1:
        (a, mix), = by_id.values()
        return mix
    weights = np.concatenate([a * mix.weights for a, mix in by_id.values()])
    means = np.concatenate([mix.means for _, mix in by_id.values()])
    covs = np.concatenate([mix.covs for _, mix in by_id.values()])
    weights, means, covs = deduplicate(weights, means, covs)
    mix = GaussianMixture(weights / weights.sum(), means, covs)
    return reduce_mixture(mix, max_components)


def to_sogmb(g, max_components=None):
    """Second-order approximation of a GMB density.

    ``w(I) = sum_phi w(I, phi)`` and, per index set, ``p^i = sum_phi w(I, phi) p^(phi), i / w(I)``.
    Index sets whose total weight is zero are dropped and counted in
    ``dropped``. ``max_components`` caps each resulting mixture by merging the
    closest pairs; ``None`` keeps the mixtures exact.
    """
    groups = defaultdict(list)
    for h in g.hypotheses:
        groups[h.indices].append(h)
    hyps = []
    dropped = 0
    for indices, members in groups.items():
        total = sum(h.weight for h in members)
        if total <= 0:
            dropped += 1
            continue
        dens = tuple(_weighted_mixture([(h.weight / total, h.densities[k]) for h in members], max_components)
                     for k in range(len(indices)))
        hyps.append(SoGmbHypothesis(indices, total, dens))
    weights = np.array([h.weight for h in hyps])
    weights = weights / weights.sum()
    return SoGmbDensity(tuple(SoGmbHypothesis(h.indices, w, h.densities) for h, w in zip(hyps, weights)),
                        dropped)


def bernoulli_components(g, max_components=None):
    """Existence probabilities and densities of the PHD-matching multi-Bernoulli.

    Returns ``{index: (r, density)}`` with ``r = sum of weights of hypotheses
    containing the index`` and ``density`` the matching weighted mixture.
    """
    contrib = defaultdict(list)
    for h in g.hypotheses:
        for i, mix in zip(h.indices, h.densities):
            contrib[i].append((h.weight, mix))
    out = {}
    for i in sorted(contrib):
        r = sum(w for w, _ in contrib[i])
        if r > 1.0 + 1e-9:
            raise InvalidMomentError(f"existence probability {r:.12g} of index {i} exceeds one")
        if r <= 0:
            continue
        out[i] = (min(r, 1.0), _weighted_mixture([(w / r, mix) for w, mix in contrib[i]], max_components))
    return out


def multi_bernoulli(bernoullis, max_hypotheses=None):
    """Expand ``{index: (r, density)}`` into SO-GMB hypotheses.

    ``max_hypotheses`` keeps only the most probable index sets (exact ranking).
    """
    items = sorted(bernoullis)
    r = np.array([bernoullis[i][0] for i in items])
    with np.errstate(divide="ignore"):
        log_in, log_out = np.log(r), np.log1p(-r)
    ranked = k_best_subsets(log_in, log_out, max_hypotheses)
    weights = np.exp(np.array([lw for _, lw in ranked]))
    weights = weights / weights.sum()
    hyps = []
    for (subset, _), w in zip(ranked, weights):
        hyps.append(SoGmbHypothesis(tuple(items[k] for k in subset), w,
                                    tuple(bernoullis[items[k]][1] for k in subset)))
    return SoGmbDensity(tuple(hyps))


def to_fogmb(g, max_hypotheses=None, max_components=None):
    """First-order (PHD-matching multi-Bernoulli) approximation in SO-GMB form."""
    return multi_bernoulli(bernoulli_components(g, max_components), max_hypotheses)
