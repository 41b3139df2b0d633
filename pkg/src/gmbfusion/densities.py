"""Labeled and unlabeled multi-object densities.

Three representations are used along the fusion pipeline:

``GlmbDensity``
    delta-GLMB posterior of a local filter. Each component carries an explicit
    label set, an association-history index, a weight and one single-target
    density per label.
``GmbDensity``
    Unlabeled counterpart. Hypotheses ``(I, phi)`` pair an index set with an
    opaque history index; the sum over permutations of the index order is
    implicit.
``SoGmbDensity``
    Histories marginalized out: one weight per index set and one density per
    ``(I, i)``.

Hypotheses are stored sorted by descending weight. Densities are immutable;
``GaussianMixture`` objects are shared between hypotheses by reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDensityError
from .gaussian import GaussianMixture

WEIGHT_TOL = 1e-9

Label = tuple  # (birth step, birth index)


def kronecker_delta(x, y):
    """1 if ``x == y`` else 0, for sets, vectors or integers."""
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return int(np.array_equal(x, y))
    return int(x == y)


def inclusion(y, x):
    """1 if ``x`` is a subset of ``y`` (``x`` may be a single element)."""
    x = x if isinstance(x, (set, frozenset, tuple, list)) else (x,)
    return int(set(x) <= set(y))


def _check_weights(weights, what):
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise InvalidDensityError(f"{what} weights must be nonnegative")
    if weights.size and abs(weights.sum() - 1.0) > WEIGHT_TOL:
        raise InvalidDensityError(f"{what} weights sum to {weights.sum():.12g}, not 1")
    if weights.size == 0:
        raise InvalidDensityError(f"{what} has no hypotheses")


def _check_mixtures(mixtures):
    for mix in mixtures:
        if abs(mix.total_weight - 1.0) > WEIGHT_TOL:
            raise InvalidDensityError(f"spatial density integrates to {mix.total_weight:.12g}, not 1")


@dataclass(frozen=True, eq=False)
class GlmbComponent:
    labels: tuple
    densities: tuple
    weight: float
    history: int = 0

    def __post_init__(self):
        labels = tuple(tuple(int(v) for v in lab) for lab in self.labels)
        if len(set(labels)) != len(labels):
            raise InvalidDensityError(f"duplicate labels in component: {labels}")
        if len(labels) != len(self.densities):
            raise InvalidDensityError("one density per label is required")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "densities", tuple(self.densities))
        object.__setattr__(self, "weight", float(self.weight))

    @classmethod
    def trusted(cls, labels, densities, weight, history=0):
        """Construct without validation from parts known to be consistent."""
        comp = object.__new__(cls)
        object.__setattr__(comp, "labels", labels)
        object.__setattr__(comp, "densities", densities)
        object.__setattr__(comp, "weight", float(weight))
        object.__setattr__(comp, "history", history)
        return comp

    @property
    def track_densities(self):
        return dict(zip(self.labels, self.densities))

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class GlmbDensity:
    components: tuple

    def __post_init__(self):
        comps = sorted(self.components, key=lambda c: -c.weight)
        _check_weights([c.weight for c in comps], "GLMB")
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def empty(cls):
        """The density of the empty set with probability one."""
        return cls((GlmbComponent((), (), 1.0),))

    def validate(self):
        _check_weights([c.weight for c in self.components], "GLMB")
        for c in self.components:
            _check_mixtures(c.densities)

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])

    @property
    def labels(self):
        return sorted({lab for c in self.components for lab in c.labels})

    def cardinality(self):
        return _cardinality((len(c), c.weight) for c in self.components)

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True, eq=False)
class GmbHypothesis:
    """Index set ``I`` (sorted), history ``phi``, weight and one density per index."""

    indices: tuple
    history: int
    weight: float
    densities: tuple

    def __post_init__(self):
        order = np.argsort(self.indices, kind="stable")
        indices = tuple(int(self.indices[i]) for i in order)
        if len(set(indices)) != len(indices):
            raise InvalidDensityError(f"repeated index in hypothesis {indices}")
        if len(indices) != len(self.densities):
            raise InvalidDensityError("one density per index is required")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "densities", tuple(self.densities[i] for i in order))
        object.__setattr__(self, "weight", float(self.weight))

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class GmbDensity:
    hypotheses: tuple

    def __post_init__(self):
        hyps = sorted(self.hypotheses, key=lambda h: -h.weight)
        _check_weights([h.weight for h in hyps], "GMB")
        object.__setattr__(self, "hypotheses", tuple(hyps))

    @property
    def index_set(self):
        return sorted({i for h in self.hypotheses for i in h.indices})

    @property
    def weights(self):
        return np.array([h.weight for h in self.hypotheses])

    def density(self, history, index):
        """``p^(phi), i``: the density of index ``i`` under history ``phi``."""
        for h in self.hypotheses:
            if h.history == history and index in h.indices:
                return h.densities[h.indices.index(index)]
        raise KeyError((history, index))

    def validate(self):
        _check_weights(self.weights, "GMB")
        for h in self.hypotheses:
            _check_mixtures(h.densities)

    def __len__(self):
        return len(self.hypotheses)


@dataclass(frozen=True, eq=False)
class SoGmbHypothesis:
    indices: tuple
    weight: float
    densities: tuple

    def __post_init__(self):
        order = np.argsort(self.indices, kind="stable")
        indices = tuple(int(self.indices[i]) for i in order)
        if len(set(indices)) != len(indices):
            raise InvalidDensityError(f"repeated index in hypothesis {indices}")
        if len(indices) != len(self.densities):
            raise InvalidDensityError("one density per index is required")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "densities", tuple(self.densities[i] for i in order))
        object.__setattr__(self, "weight", float(self.weight))

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class SoGmbDensity:
    """Second-order GMB; ``dropped`` counts zero-weight index sets removed on construction."""

    hypotheses: tuple
    dropped: int = field(default=0)

    def __post_init__(self):
        hyps = sorted(self.hypotheses, key=lambda h: -h.weight)
        _check_weights([h.weight for h in hyps], "SO-GMB")
        seen = set()
        for h in hyps:
            if h.indices in seen:
                raise InvalidDensityError(f"index set {h.indices} appears twice")
            seen.add(h.indices)
        object.__setattr__(self, "hypotheses", tuple(hyps))

    @property
    def index_set(self):
        return sorted({i for h in self.hypotheses for i in h.indices})

    @property
    def weights(self):
        return np.array([h.weight for h in self.hypotheses])

    def hypothesis(self, indices):
        key = tuple(sorted(indices))
        for h in self.hypotheses:
            if h.indices == key:
                return h
        raise KeyError(key)

    def validate(self):
        _check_weights(self.weights, "SO-GMB")
        for h in self.hypotheses:
            _check_mixtures(h.densities)

    def __len__(self):
        return len(self.hypotheses)


def _cardinality(pairs):
    pairs = list(pairs)
    n_max = max((n for n, _ in pairs), default=0)
    rho = np.zeros(n_max + 1)
    for n, w in pairs:
        rho[n] += w
    return rho


def gmb_cardinality(d):
    """rho(n): total weight of the hypotheses whose index set has n elements."""
    return _cardinality((len(h), h.weight) for h in d.hypotheses)


sogmb_cardinality = gmb_cardinality


def _phd(d, x):
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1]) if x.ndim >= 2 else 0.0
    for h in d.hypotheses:
        for mix in h.densities:
            total = total + h.weight * mix.pdf(x)
    return total


def gmb_phd(d, x):
    """PHD ``v(x) = sum_(I, phi) w sum_(i in I) p^(phi), i(x)`` at a point or batch of points."""
    return _phd(d, x)


def sogmb_phd(d, x):
    """PHD ``v(x) = sum_I w(I) sum_(i in I) p^i(x)`` of a second-order GMB."""
    return _phd(d, x)


def expected_cardinality(rho):
    return float(np.arange(len(rho)) @ rho)


# --- serialization ----------------------------------------------------------
#
# JSON Lines. The first record is a header ``{"type": ..., "dim": d}``; every
# following record is one hypothesis:
#
#   {"indices": [...], "phi": int, "weight": float,
#    "densities": [{"weights": [...], "means": [[...]], "covs": [[[...]]]}, ...]}
#
# GLMB records use "labels" (list of [birth step, index]) and "history";
# SO-GMB records have no "phi".

def _mix_to_dict(mix):
    return {"weights": mix.weights.tolist(), "means": mix.means.tolist(), "covs": mix.covs.tolist()}


def _mix_from_dict(rec):
    return GaussianMixture(np.array(rec["weights"]), np.array(rec["means"]), np.array(rec["covs"]))


def dumps(d):
    """Serialize a GLMB, GMB or SO-GMB density to JSON Lines text."""
    if isinstance(d, GlmbDensity):
        kind, items = "glmb", d.components
    elif isinstance(d, GmbDensity):
        kind, items = "gmb", d.hypotheses
    elif isinstance(d, SoGmbDensity):
        kind, items = "sogmb", d.hypotheses
    else:
        raise TypeError(f"cannot serialize {type(d).__name__}")
    dims = [m.dim for it in items for m in it.densities]
    lines = [json.dumps({"type": kind, "dim": dims[0] if dims else None})]
    for it in items:
        rec = {}
        if kind == "glmb":
            rec["labels"] = [list(lab) for lab in it.labels]
            rec["history"] = it.history
        else:
            rec["indices"] = list(it.indices)
            if kind == "gmb":
                rec["phi"] = it.history
        rec["weight"] = it.weight
        rec["densities"] = [_mix_to_dict(m) for m in it.densities]
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def loads(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidDensityError("empty density record")
    kind = json.loads(lines[0])["type"]
    records = [json.loads(ln) for ln in lines[1:]]
    if kind == "glmb":
        return GlmbDensity(tuple(
            GlmbComponent(tuple(tuple(lab) for lab in r["labels"]),
                          tuple(_mix_from_dict(m) for m in r["densities"]), r["weight"], r["history"])
            for r in records))
    if kind == "gmb":
        return GmbDensity(tuple(
            GmbHypothesis(tuple(r["indices"]), r["phi"], r["weight"],
                          tuple(_mix_from_dict(m) for m in r["densities"]))
            for r in records))
    if kind == "sogmb":
        return SoGmbDensity(tuple(
            SoGmbHypothesis(tuple(r["indices"]), r["weight"], tuple(_mix_from_dict(m) for m in r["densities"]))
            for r in records))
    raise InvalidDensityError(f"unknown density type {kind!r}")
