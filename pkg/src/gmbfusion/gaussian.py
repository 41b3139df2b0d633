"""Gaussian and Gaussian-mixture algebra.

Everything the filter and the GCI fusion need from single-target densities:
evaluation, exponentiation, products and the cross integral
``eta = int p1(x)**w1 * p2(x)**w2 dx`` together with the normalized fused density.

Mixture powers are taken component-wise, ``(sum_i d_i)**w ~ sum_i d_i**w``.
For single Gaussians this is exact; for mixtures it is the standard
approximation that keeps the fused density in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateCovarianceError, EmptyDensityError, InvalidExponentError

LOG_2PI = np.log(2.0 * np.pi)
MAX_CONDITION = 1e12
SYMMETRY_RTOL = 1e-9


def symmetrize(cov):
    cov = np.asarray(cov, dtype=float)
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def check_covariances(covs):
    """Raise if any covariance in a stack is singular or condition number > 1e12."""
    covs = np.asarray(covs, dtype=float)
    eig = np.linalg.eigvalsh(covs.reshape((-1,) + covs.shape[-2:]))
    lo, hi = eig[:, 0], eig[:, -1]
    if np.any(lo <= 0.0) or np.any(hi > MAX_CONDITION * lo):
        raise DegenerateCovarianceError(
            f"covariance not positive definite or condition number above {MAX_CONDITION:g}"
            f" (smallest eigenvalue {lo.min():.3g}, largest {hi.max():.3g})")


@dataclass(frozen=True, eq=False)
class WeightedGaussian:
    """``weight * N(x; mean, cov)``."""

    weight: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")
        _check_symmetric(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Weighted sum of Gaussians stored as stacked arrays.

    ``weights`` has shape (n,), ``means`` (n, d) and ``covs`` (n, d, d).
    Instances are treated as immutable and are freely shared between
    hypotheses, so object identity is meaningful to callers.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim == 1:
            means = means[None, :]
        if covs.ndim == 2:
            covs = covs[None, :, :]
        n = weights.size
        if n == 0:
            raise EmptyDensityError("a Gaussian mixture needs at least one component")
        d = means.shape[1]
        if means.shape != (n, d) or covs.shape != (n, d, d):
            raise ValueError(f"inconsistent shapes {weights.shape}, {means.shape}, {covs.shape}")
        if np.any(weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        _check_symmetric(covs)
        for name, arr in (("weights", weights), ("means", means), ("covs", covs)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def single(cls, mean, cov, weight=1.0):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        return cls(np.array([weight]), mean[None, :], np.atleast_2d(cov)[None, :, :])

    @classmethod
    def from_components(cls, components):
        components = list(components)
        if not components:
            raise EmptyDensityError("a Gaussian mixture needs at least one component")
        return cls(np.array([c.weight for c in components]),
                   np.stack([c.mean for c in components]),
                   np.stack([c.cov for c in components]))

    def __len__(self):
        return self.weights.size

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def components(self):
        return [WeightedGaussian(w, m, P) for w, m, P in zip(self.weights, self.means, self.covs)]

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def normalized(self):
        total = self.weights.sum()
        if total <= 0:
            raise EmptyDensityError("cannot normalize a mixture with zero total weight")
        return GaussianMixture(self.weights / total, self.means, self.covs)

    def pdf(self, x):
        """Evaluate the mixture at a point (d,) or at a batch of points (..., d)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        logs = log_gaussian(x[..., None, :], self.means, self.covs)
        with np.errstate(divide="ignore"):
            return np.exp(logsumexp(logs + np.log(self.weights), axis=-1))

    def mean(self):
        w = self.weights / self.weights.sum()
        return w @ self.means

    def covariance(self):
        w = self.weights / self.weights.sum()
        mu = w @ self.means
        diff = self.means - mu
        return symmetrize(np.einsum("i,ijk->jk", w, self.covs) + np.einsum("i,ij,ik->jk", w, diff, diff))


def _check_symmetric(covs):
    asym = np.abs(covs - np.swapaxes(covs, -1, -2)).max(initial=0.0)
    if asym > SYMMETRY_RTOL * max(np.abs(covs).max(initial=0.0), 1e-300):
        raise DegenerateCovarianceError(f"covariance is not symmetric (max asymmetry {asym:.3g})")


def log_gaussian(x, mean, cov):
    """Log density of N(mean, cov) at x, broadcasting over leading axes."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = mean.shape[-1]
    diff = x - mean
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError("covariance is not positive definite") from exc
    logdet = 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(-1)
    sol = np.linalg.solve(chol, diff[..., None])[..., 0]
    return -0.5 * (d * LOG_2PI + logdet + (sol ** 2).sum(-1))


def evaluate(g, x):
    """``weight * N(x; mean, cov)`` for a WeightedGaussian at a point or batch of points."""
    check_covariances(g.cov)
    x = np.asarray(x, dtype=float)
    if g.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return g.weight * np.exp(log_gaussian(x, g.mean, g.cov))


def log_power_scale(cov, omega):
    """log of ``((2 pi)^d |P|)^((1 - w)/2) * w^(-d/2)``, vectorized over stacked covariances."""
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[-1]
    _, logdet = np.linalg.slogdet(cov)
    return 0.5 * (1.0 - omega) * (d * LOG_2PI + logdet) - 0.5 * d * np.log(omega)


def _check_omega(omega):
    if not 0.0 < omega <= 1.0:
        raise InvalidExponentError(f"exponent must lie in (0, 1], got {omega}")


def power(g, omega):
    """Raise a weighted Gaussian to the power ``omega``.

    ``(w N(x; m, P))**omega == scale * N(x; m, P / omega)`` holds exactly; the
    returned Gaussian has unit weight and ``scale`` absorbs ``w**omega``.
    """
    _check_omega(omega)
    check_covariances(g.cov)
    log_scale = log_power_scale(g.cov, omega)
    with np.errstate(divide="ignore"):
        log_scale = log_scale + omega * np.log(g.weight)
    return float(np.exp(log_scale)), WeightedGaussian(1.0, g.mean, symmetrize(g.cov / omega))


def product(g1, g2):
    """``N(x; m1, P1) N(x; m2, P2) = scale * N(x; m, P)`` with ``scale = N(m1; m2, P1 + P2)``.

    Component weights multiply into ``scale``.
    """
    check_covariances(g1.cov)
    check_covariances(g2.cov)
    scale = g1.weight * g2.weight * np.exp(log_gaussian(g1.mean, g2.mean, g1.cov + g2.cov))
    gain = np.linalg.solve((g1.cov + g2.cov).T, g1.cov.T).T
    mean = g1.mean + gain @ (g2.mean - g1.mean)
    cov = symmetrize(g1.cov - gain @ g1.cov)
    return float(scale), WeightedGaussian(1.0, mean, cov)


def cross_log_kernel(means1, covs1, means2, covs2, omega1, omega2):
    """log of ``int N_i(x)**omega1 N_j(x)**omega2 dx`` for every pair of components.

    Returns an array of shape (n1, n2).
    """
    means1, covs1 = np.asarray(means1, float), np.asarray(covs1, float)
    means2, covs2 = np.asarray(means2, float), np.asarray(covs2, float)
    s1 = log_power_scale(covs1, omega1)
    s2 = log_power_scale(covs2, omega2)
    joint = covs1[:, None] / omega1 + covs2[None, :] / omega2
    return s1[:, None] + s2[None, :] + log_gaussian(means1[:, None], means2[None, :], joint)


def fuse_components(mean1, cov1, mean2, cov2, omega1, omega2):
    """Normalized product of ``N(m1, P1)**omega1`` and ``N(m2, P2)**omega2``.

    Information-form covariance intersection, broadcasting over leading axes.
    """
    info1 = np.linalg.inv(cov1)
    info2 = np.linalg.inv(cov2)
    info = omega1 * info1 + omega2 * info2
    cov = symmetrize(np.linalg.inv(info))
    vec = omega1 * (info1 @ mean1[..., None]) + omega2 * (info2 @ mean2[..., None])
    return (cov @ vec)[..., 0], cov


def fusion_cross_term(p1, p2, omega1, omega2):
    """Return ``(eta, fused)`` for two normalized mixtures.

    ``eta = int p1**omega1 p2**omega2 dx`` and ``fused`` is the integrand divided
    by ``eta``. Mixture powers are taken per component; every pair of components
    contributes one Gaussian to the fused mixture.
    """
    if len(p1) == 0 or len(p2) == 0:
        raise EmptyDensityError("cannot fuse an empty mixture")
    if abs(omega1 + omega2 - 1.0) > 1e-12:
        raise InvalidExponentError(f"fusion weights must sum to one, got {omega1} + {omega2}")
    _check_omega(omega1)
    _check_omega(omega2)
    check_covariances(p1.covs)
    check_covariances(p2.covs)
    log_eta, fused = _fuse_mixtures(p1, p2, omega1, omega2)
    return float(np.exp(log_eta)), fused


def _fuse_mixtures(p1, p2, omega1, omega2, log_kernel=None):
    if log_kernel is None:
        log_kernel = cross_log_kernel(p1.means, p1.covs, p2.means, p2.covs, omega1, omega2)
    with np.errstate(divide="ignore"):
        log_w = (omega1 * np.log(p1.weights)[:, None] + omega2 * np.log(p2.weights)[None, :]
                 + log_kernel).ravel()
    log_eta = logsumexp(log_w)
    mean, cov = fuse_components(p1.means[:, None], p1.covs[:, None], p2.means[None, :], p2.covs[None, :],
                                omega1, omega2)
    d = p1.dim
    weights = np.exp(log_w - log_eta) if np.isfinite(log_eta) else np.full(log_w.size, 1.0 / log_w.size)
    keep = weights > 0
    if not keep.any():
        keep[:] = True
    return log_eta, GaussianMixture(weights[keep] / weights[keep].sum(),
                                    mean.reshape(-1, d)[keep], cov.reshape(-1, d, d)[keep])


def merge(weights, means, covs):
    """Moment-preserving merge of weighted components into one (w, m, P)."""
    weights = np.asarray(weights, float)
    total = weights.sum()
    w = weights / total
    mu = w @ means
    diff = means - mu
    cov = np.einsum("i,ijk->jk", w, covs) + np.einsum("i,ij,ik->jk", w, diff, diff)
    return total, mu, symmetrize(cov)


def collapse(mixture):
    """Moment-matched single Gaussian with the mixture's total weight."""
    if len(mixture) == 1:
        return mixture
    w, m, P = merge(mixture.weights, mixture.means, mixture.covs)
    return GaussianMixture(np.array([w]), m[None], P[None])


def reduce_mixture(mixture, max_components):
    """Merge the closest pair of components until at most ``max_components`` remain.

    Closeness is the Mahalanobis distance of the mean difference under the
    summed covariances. Total weight, mean and covariance are preserved.
    """
    if max_components is None or len(mixture) <= max_components:
        return mixture
    weights = mixture.weights.astype(float)
    means = mixture.means.astype(float)
    covs = mixture.covs.astype(float)
    n = len(weights)

    def distances(i):
        diff = means - means[i]
        joint = covs + covs[i]
        return np.einsum("ij,ij->i", diff, np.linalg.solve(joint, diff[..., None])[..., 0])

    diff = means[:, None] - means[None, :]
    dist = np.einsum("ijk,ijk->ij", diff,
                     np.linalg.solve(covs[:, None] + covs[None, :], diff[..., None])[..., 0])
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    for _ in range(n - max_components):
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        i, j = min(i, j), max(i, j)
        weights[i], means[i], covs[i] = merge(weights[[i, j]], means[[i, j]], covs[[i, j]])
        weights[j] = 0.0
        active[j] = False
        dist[j, :] = dist[:, j] = np.inf
        row = np.where(active, distances(i), np.inf)
        row[i] = np.inf
        dist[i, :] = dist[:, i] = row
    return GaussianMixture(weights[active], means[active], covs[active])


def deduplicate(weights, means, covs):
    """Sum the weights of bit-identical components."""
    seen = {}
    order = []
    for w, m, P in zip(weights, means, covs):
        key = m.tobytes() + P.tobytes()
        if key in seen:
            seen[key][0] += w
        else:
            seen[key] = [w, m, P]
            order.append(key)
    rows = [seen[k] for k in order]
    return (np.array([r[0] for r in rows]), np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))
