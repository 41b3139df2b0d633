"""Local delta-GLMB (Vo-Vo) filter with Gaussian track densities.

Prediction and update are separate steps. Truncation uses ranked assignment:
ranked subsets for survival and LMB birth in the prediction, Murty's
algorithm over a (tracks x (measurements + misses)) log-cost matrix in the
update.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .assignment import iter_murty, k_best_subsets
from .densities import GlmbComponent, GlmbDensity
from .errors import FilterDivergenceError, InvalidParameterError
from .gaussian import GaussianMixture, collapse, symmetrize

# clutter intensity floor so that lambda_c = 0 stays in the log domain
MIN_LOG_CLUTTER = -700.0
_ONE = np.ones(1)


@dataclass(frozen=True, eq=False)
class MotionModel:
    transition: np.ndarray
    process_noise: np.ndarray
    survival_probability: float

    def __post_init__(self):
        if not 0.0 <= self.survival_probability <= 1.0:
            raise InvalidParameterError("survival probability must lie in [0, 1]")
        Q = symmetrize(self.process_noise)
        if np.linalg.eigvalsh(Q).min() < -1e-9 * max(1.0, np.abs(Q).max()):
            raise InvalidParameterError("process noise must be positive semi-definite")
        object.__setattr__(self, "transition", np.asarray(self.transition, float))
        object.__setattr__(self, "process_noise", Q)

    @classmethod
    def constant_velocity(cls, dt=1.0, sigma_v=5.0, survival_probability=0.98):
        """Nearly constant velocity model on ``[px, py, vx, vy]``."""
        eye, zero = np.eye(2), np.zeros((2, 2))
        F = np.block([[eye, dt * eye], [zero, eye]])
        Q = sigma_v ** 2 * np.block([[dt ** 4 / 4 * eye, dt ** 3 / 2 * eye],
                                     [dt ** 3 / 2 * eye, dt ** 2 * eye]])
        return cls(F, Q, survival_probability)


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Point-measurement sensor with Poisson clutter, uniform over ``region``.

    ``region`` is ``((xmin, xmax), (ymin, ymax))`` in measurement coordinates.
    """

    observation: np.ndarray
    noise: np.ndarray
    detection_probability: float
    clutter_rate: float
    region: tuple

    def __post_init__(self):
        if not 0.0 <= self.detection_probability <= 1.0:
            raise InvalidParameterError("detection probability must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise InvalidParameterError("clutter rate must be nonnegative")
        R = symmetrize(self.noise)
        if np.linalg.eigvalsh(R).min() < 0:
            raise InvalidParameterError("measurement noise must be positive semidefinite")
        object.__setattr__(self, "observation", np.asarray(self.observation, float))
        object.__setattr__(self, "noise", R)
        object.__setattr__(self, "region", tuple(tuple(float(v) for v in b) for b in self.region))

    @classmethod
    def position(cls, sigma=14.0, detection_probability=0.9, clutter_rate=15.0,
                 region=((0.0, 10000.0), (0.0, 10000.0))):
        H = np.hstack([np.eye(2), np.zeros((2, 2))])
        return cls(H, sigma ** 2 * np.eye(2), detection_probability, clutter_rate, region)

    @property
    def volume(self):
        return float(np.prod([hi - lo for lo, hi in self.region]))

    @property
    def log_clutter_intensity(self):
        if self.clutter_rate == 0:
            return MIN_LOG_CLUTTER
        return max(math.log(self.clutter_rate / self.volume), MIN_LOG_CLUTTER)


@dataclass(frozen=True, eq=False)
class BirthComponent:
    existence: float
    density: GaussianMixture
    index: int

    def __post_init__(self):
        if not 0.0 <= self.existence <= 1.0:
            raise InvalidParameterError("birth existence probability must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class BirthModel:
    """LMB birth; component ``index`` becomes label ``(step, index)``."""

    components: tuple

    @classmethod
    def gaussian(cls, means, cov, existence):
        return cls(tuple(BirthComponent(existence, GaussianMixture.single(m, cov), i)
                         for i, m in enumerate(means)))

    @classmethod
    def none(cls):
        return cls(())


@dataclass(frozen=True)
class MeasurementScan:
    step: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def _log(p):
    return -np.inf if p <= 0 else math.log(p)


def kalman_predict(mix, motion):
    F, Q = motion.transition, motion.process_noise
    means = mix.means @ F.T
    covs = symmetrize(F @ mix.covs @ F.T + Q)
    return GaussianMixture(mix.weights, means, covs)


def _normalize(log_weights):
    log_weights = np.asarray(log_weights, dtype=float)
    return np.exp(log_weights - logsumexp(log_weights))


def _prediction_factors(prior, motion, birth, step, max_components, birth_components):
    """Survival children and birth sets of a prediction, kept apart.

    Returns two lists of ``(log weight, labels, densities)``; the predicted
    density is their product.
    """
    ps = motion.survival_probability
    log_ps, log_qs = _log(ps), _log(1.0 - ps)
    births = birth.components
    birth_sets = k_best_subsets([_log(b.existence) for b in births],
                                [_log(1.0 - b.existence) for b in births], birth_components)
    birth_parts = [(lw, tuple((int(step), int(births[j].index)) for j in subset),
                    tuple(births[j].density for j in subset)) for subset, lw in birth_sets]

    predicted = {}

    def track(mix):
        key = id(mix)
        if key not in predicted:
            predicted[key] = (mix, kalman_predict(mix, motion))
        return predicted[key][1]

    prior_components = [c for c in prior.components if c.weight > 0]
    if max_components is None:
        requests = [None] * len(prior_components)
    else:
        roots = np.sqrt([c.weight for c in prior_components])
        requests = np.ceil(max_components * roots / roots.sum()).astype(int)
    survival_sets = {}
    parts = []
    for comp, req in zip(prior_components, requests):
        key = (len(comp), req)
        if key not in survival_sets:
            survival_sets[key] = k_best_subsets([log_ps] * len(comp), [log_qs] * len(comp), req)
        log_w = math.log(comp.weight)
        for subset, lw in survival_sets[key]:
            parts.append((log_w + lw, tuple(comp.labels[i] for i in subset),
                          tuple(track(comp.densities[i]) for i in subset)))
    return parts, birth_parts


def _join(labels1, dens1, labels2, dens2):
    labels, dens = labels1 + labels2, dens1 + dens2
    if labels1 and labels2 and labels1[-1] > labels2[0]:
        order = sorted(range(len(labels)), key=lambda i: labels[i])
        labels, dens = tuple(labels[i] for i in order), tuple(dens[i] for i in order)
    return labels, dens


def predict(prior, motion, birth, step=0, max_components=None, birth_components=None):
    """delta-GLMB prediction with survival thinning and LMB birth.

    Surviving and birth label sets are truncated separately and every kept
    survival child is combined with every kept birth set. ``max_components``
    is the survival budget, shared among prior components in proportion to
    the square root of their weights (at least one each); each component
    keeps its best survival subsets, ranked exactly. ``birth_components``
    keeps the most probable birth sets. ``None`` disables either truncation.
    Truncating births separately keeps track deaths represented, which a
    single global ranking would crowd out with birth combinations.
    """
    parts, birth_parts = _prediction_factors(prior, motion, birth, step, max_components, birth_components)
    log_w = [p[0] + b[0] for p in parts for b in birth_parts]
    weights = _normalize(log_w)
    components = []
    for (p, b), w in zip(((p, b) for p in parts for b in birth_parts), weights):
        components.append(_join(p[1], p[2], b[1], b[2]) + (w,))
    return _relabel_histories(components)


def _relabel_histories(components):
    # components are (labels, densities, weight) built from already validated parts
    components = sorted(components, key=lambda c: -c[2])
    return GlmbDensity(tuple(GlmbComponent.trusted(labels, dens, w, h)
                             for h, (labels, dens, w) in enumerate(components)))


class _TrackUpdate:
    """Measurement-update results for one predicted track density."""

    __slots__ = ("prior", "log_lik", "posterior")

    def __init__(self, mix, points, sensor, gate):
        H, R = sensor.observation, sensor.noise
        self.prior = mix
        m = len(points)
        self.log_lik = np.full(m, -np.inf)
        self.posterior = [None] * m
        if m == 0:
            return
        comp_ll = np.empty((len(mix), m))
        comp_means = np.empty((len(mix), m, mix.dim))
        comp_covs = np.empty((len(mix),) + mix.covs.shape[1:])
        gated = np.zeros(m, dtype=bool)
        for c in range(len(mix)):
            mean, cov = mix.means[c], mix.covs[c]
            S = symmetrize(H @ cov @ H.T + R)
            S_inv = np.linalg.inv(S)
            nu = points - H @ mean
            d2 = np.einsum("ij,jk,ik->i", nu, S_inv, nu)
            gated |= d2 <= gate ** 2
            _, logdet = np.linalg.slogdet(S)
            comp_ll[c] = math.log(mix.weights[c]) - 0.5 * (len(S) * math.log(2 * math.pi) + logdet + d2)
            K = cov @ H.T @ S_inv
            comp_means[c] = mean + nu @ K.T
            comp_covs[c] = symmetrize(cov - K @ S @ K.T)
        idx = np.flatnonzero(gated)
        if len(mix) == 1:
            self.log_lik[idx] = comp_ll[0, idx]
            for j in idx:
                self.posterior[j] = GaussianMixture(_ONE, comp_means[0, j][None], comp_covs)
            return
        top = comp_ll[:, idx].max(axis=0)
        ll = top + np.log(np.exp(comp_ll[:, idx] - top).sum(axis=0))
        self.log_lik[idx] = ll
        for j, l in zip(idx, ll):
            w = np.exp(comp_ll[:, j] - l)
            self.posterior[j] = collapse(GaussianMixture(w, comp_means[:, j], comp_covs))


def update(predicted, scan, sensor, k_best=100, gate=6.0):
    """delta-GLMB measurement update truncated to the ``k_best`` best components.

    Every predicted component gets a cost matrix with one row per track and
    columns for the measurements followed by one private missed-detection
    column per track. Murty's algorithm ranks its association maps lazily and
    the ``k_best`` best maps over all components are kept. Measurements
    outside the ``gate`` (Mahalanobis units) of a track are not offered to it.
    """
    parts = [(_log(c.weight), c.labels, c.densities) for c in predicted.components if c.weight > 0]
    return _update_factored(parts, [(0.0, (), ())], scan, sensor, k_best, gate)


def _update_factored(parts, birth_parts, scan, sensor, k_best, gate):
    """Update of the predicted density ``parts x birth_parts`` (see ``_prediction_factors``).

    Candidates are visited in order of an upper bound on their best
    association (every track taking its cheapest option independently), so
    the search ends as soon as no remaining candidate can enter the top
    ``k_best``.
    """
    if k_best < 1:
        raise InvalidParameterError("k_best must be at least 1")
    points = scan.points
    m = len(points)
    pd = sensor.detection_probability
    log_pd, log_miss = _log(pd), _log(1.0 - pd)
    log_kappa = sensor.log_clutter_intensity

    tracks = {}

    def rows(densities):
        # association costs of each track against every measurement, and the
        # sum over tracks of the cheapest option including a miss
        out = np.empty((len(densities), m))
        best = 0.0
        for i, mix in enumerate(densities):
            key = id(mix)
            if key not in tracks:
                tu = _TrackUpdate(mix, points, sensor, gate)
                row = -(log_pd + tu.log_lik - log_kappa) if log_pd > -np.inf else np.full(m, np.inf)
                row[np.isnan(row)] = np.inf
                tracks[key] = (tu, row, min(row.min(initial=np.inf), -log_miss))
            out[i] = tracks[key][1]
            best += tracks[key][2]
        return out, best

    part_rows = [rows(p[2]) for p in parts]
    birth_rows = [rows(b[2]) for b in birth_parts]
    bound = (np.array([p[0] - r[1] for p, r in zip(parts, part_rows)])[:, None]
             + np.array([b[0] - r[1] for b, r in zip(birth_parts, birth_rows)])[None, :])
    flat = np.argsort(-bound, axis=None, kind="stable")

    heap = []  # min-heap of (log weight, -order, part index, birth index, assignment columns)
    order = 0
    n_births = len(birth_parts)
    for f in flat:
        pi, bi = divmod(int(f), n_births)
        if bound[pi, bi] == -np.inf or (len(heap) >= k_best and bound[pi, bi] <= heap[0][0]):
            break
        n = len(parts[pi][1]) + len(birth_parts[bi][1])
        cost = np.full((n, m + n), np.inf)
        if n:
            cost[:, :m] = np.vstack([part_rows[pi][0], birth_rows[bi][0]])
            cost[np.arange(n), m + np.arange(n)] = -log_miss
        log_w = parts[pi][0] + birth_parts[bi][0]
        for cols, total in iter_murty(cost):
            value = log_w - total
            item = (value, -order, pi, bi, cols)
            order += 1
            if len(heap) < k_best:
                heapq.heappush(heap, item)
            elif value > heap[0][0]:
                heapq.heapreplace(heap, item)
            else:
                break
    if not heap:
        raise FilterDivergenceError(f"no feasible association at step {scan.step}")
    chosen = sorted(heap, key=lambda c: (-c[0], -c[1]))
    weights = _normalize([c[0] for c in chosen])

    components = []
    for (_, _, pi, bi, cols), w in zip(chosen, weights):
        prior_dens = parts[pi][2] + birth_parts[bi][2]
        dens = tuple(mix if j >= m else tracks[id(mix)][0].posterior[j] for mix, j in zip(prior_dens, cols))
        labels, dens = _join(parts[pi][1], dens[:len(parts[pi][1])], birth_parts[bi][1],
                             dens[len(parts[pi][1]):])
        components.append((labels, dens, w))
    return _relabel_histories(components)


def prune(d, weight_threshold=1e-5, max_components=100):
    """Drop components below ``weight_threshold``, keep at most ``max_components``, renormalize.

    The best component always survives.
    """
    if max_components < 1:
        raise InvalidParameterError("max_components must be at least 1")
    comps = d.components[:max_components]
    kept = [c for c in comps if c.weight >= weight_threshold] or [comps[0]]
    total = sum(c.weight for c in kept)
    return GlmbDensity(tuple(GlmbComponent.trusted(c.labels, c.densities, c.weight / total, c.history)
                             for c in kept))


def extract_map(posterior):
    """MAP cardinality, then the best component of that cardinality.

    Returns ``(states, labels)`` with ``states`` of shape (n, d).
    """
    rho = posterior.cardinality()
    n_hat = int(np.argmax(rho))
    if n_hat == 0:
        dim = next((m.dim for c in posterior.components for m in c.densities), 4)
        return np.empty((0, dim)), []
    best = next(c for c in posterior.components if len(c) == n_hat)
    return np.array([mix.mean() for mix in best.densities]), list(best.labels)


@dataclass
class GlmbFilter:
    """Predict-update-prune loop of one sensor node."""

    motion: MotionModel
    sensor: SensorModel
    birth: BirthModel
    k_best: int = 100
    predict_components: int = 100
    birth_components: int | None = None
    prune_threshold: float = 1e-5
    max_components: int = 100
    gate: float = 6.0
    density: GlmbDensity = None

    def __post_init__(self):
        if self.density is None:
            self.density = GlmbDensity.empty()

    def step(self, scan):
        parts, births = _prediction_factors(self.density, self.motion, self.birth, scan.step,
                                            self.predict_components, self.birth_components)
        post = _update_factored(parts, births, scan, self.sensor, self.k_best, self.gate)
        self.density = prune(post, self.prune_threshold, self.max_components)
        return self.density
