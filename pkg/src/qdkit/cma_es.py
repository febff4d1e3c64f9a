"""A (mu/mu_w, lambda)-CMA-ES updated from an externally supplied ranking.

The engine never looks at fitness values: `tell` receives a permutation
putting the best sample first, which lets the same code serve plain fitness
ranking and archive-improvement ranking. Strategy constants follow the
standard tutorial defaults with non-negative recombination weights.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigError, DegenerateStateError, UsageError

CONDITION_LIMIT = 1e14
MIN_SCALE = 1e-32


class CmaEs:
    """Covariance matrix adaptation evolution strategy over R^dim.

    The sampling distribution is N(mean, sigma^2 * cov). The eigendecomposition
    of cov is cached and refreshed lazily, at most every
    max(1, floor(1 / (10 * dim * (c1 + cmu)))) generations.
    """

    def __init__(self, dim: int, sigma0: float, lam: int, mean: np.ndarray | None = None):
        if dim < 1:
            raise ConfigError(f"dim must be >= 1, got {dim}")
        if sigma0 <= 0:
            raise ConfigError(f"sigma0 must be positive, got {sigma0}")
        if lam < 2:
            raise ConfigError(f"lambda must be >= 2, got {lam}")
        self.dim = dim
        self.lam = lam
        self.mu = lam // 2

        raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, self.mu + 1))
        self.weights = np.zeros(lam)
        self.weights[: self.mu] = raw / raw.sum()
        self.mueff = 1.0 / float(np.sum(self.weights[: self.mu] ** 2))

        d, mueff = dim, self.mueff
        self.cc = (4.0 + mueff / d) / (d + 4.0 + 2.0 * mueff / d)
        self.cs = (mueff + 2.0) / (d + mueff + 5.0)
        self.c1 = 2.0 / ((d + 1.3) ** 2 + mueff)
        self.cmu = min(1.0 - self.c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((d + 2.0) ** 2 + mueff))
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (d + 1.0)) - 1.0) + self.cs
        self.chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
        self.eigen_interval = max(1, int(1.0 / (10.0 * d * (self.c1 + self.cmu))))

        self.mean = np.zeros(dim) if mean is None else np.array(mean, dtype=float)
        if self.mean.shape != (dim,):
            raise ConfigError(f"mean must have shape ({dim},), got {self.mean.shape}")
        self.sigma = float(sigma0)
        self.cov = np.eye(dim)
        self.p_sigma = np.zeros(dim)
        self.p_c = np.zeros(dim)
        self.generation = 0

        self._eigen_basis: np.ndarray | None = None
        self._eigen_scale: np.ndarray | None = None  # sqrt of eigenvalues
        self._inv_sqrt: np.ndarray | None = None
        self._eigen_generation = -1
        self._last_ask: np.ndarray | None = None

    def _refresh_eigen(self) -> None:
        if (
            self._eigen_basis is not None
            and self.generation - self._eigen_generation < self.eigen_interval
        ):
            return
        if not np.all(np.isfinite(self.cov)):
            raise DegenerateStateError("covariance contains non-finite entries")
        values, basis = np.linalg.eigh(self.cov)
        if not np.all(np.isfinite(values)) or values[0] <= 0:
            raise DegenerateStateError(f"covariance not positive definite (min eigenvalue {values[0]})")
        self._eigen_basis = basis
        self._eigen_scale = np.sqrt(values)
        self._inv_sqrt = (basis / self._eigen_scale) @ basis.T
        self._eigen_generation = self.generation

    def ask(self, rng: np.random.Generator) -> np.ndarray:
        """Sample lambda candidates, shape (lambda, dim)."""
        self._refresh_eigen()
        z = rng.standard_normal((self.lam, self.dim))
        samples = self.mean + self.sigma * (z * self._eigen_scale) @ self._eigen_basis.T
        self._last_ask = samples
        return samples

    def tell(self, samples: np.ndarray, ranking: np.ndarray) -> None:
        """Update mean, paths, covariance, and step size from a ranked batch.

        ranking[i] is the batch index of the i-th best sample; only the order
        matters, never the magnitudes that produced it.
        """
        samples = np.asarray(samples, dtype=float)
        if self._last_ask is None or not np.array_equal(samples, self._last_ask):
            raise UsageError("tell requires the exact sample batch from the preceding ask")
        ranking = np.asarray(ranking, dtype=int)
        if ranking.shape != (self.lam,) or not np.array_equal(np.sort(ranking), np.arange(self.lam)):
            raise UsageError(f"ranking must be a permutation of 0..{self.lam - 1}")
        self._last_ask = None

        old_mean = self.mean
        y = (samples[ranking[: self.mu]] - old_mean) / self.sigma  # (mu, dim)
        w = self.weights[: self.mu]
        y_w = w @ y
        self.mean = old_mean + self.sigma * y_w

        self._refresh_eigen()
        self.p_sigma = (1.0 - self.cs) * self.p_sigma + math.sqrt(
            self.cs * (2.0 - self.cs) * self.mueff
        ) * (self._inv_sqrt @ y_w)
        self.generation += 1
        ps_norm = float(np.linalg.norm(self.p_sigma))
        decay = math.sqrt(1.0 - (1.0 - self.cs) ** (2 * self.generation))
        hsig = 1.0 if ps_norm / decay / self.chi_n < 1.4 + 2.0 / (self.dim + 1.0) else 0.0
        self.p_c = (1.0 - self.cc) * self.p_c + hsig * math.sqrt(
            self.cc * (2.0 - self.cc) * self.mueff
        ) * y_w

        rank_one = np.outer(self.p_c, self.p_c)
        rank_mu = (w[:, None] * y).T @ y
        delta_hsig = (1.0 - hsig) * self.cc * (2.0 - self.cc)  # variance loss when hsig stalls
        self.cov = (
            (1.0 - self.c1 - self.cmu) * self.cov
            + self.c1 * (rank_one + delta_hsig * self.cov)
            + self.cmu * rank_mu
        )
        self.cov = (self.cov + self.cov.T) / 2.0
        self.sigma *= math.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0))

    def is_degenerate(self) -> bool:
        """True when the state can no longer produce meaningful samples."""
        if not (
            math.isfinite(self.sigma)
            and np.all(np.isfinite(self.mean))
            and np.all(np.isfinite(self.cov))
            and np.all(np.isfinite(self.p_sigma))
            and np.all(np.isfinite(self.p_c))
        ):
            return True
        try:
            self._refresh_eigen()
        except DegenerateStateError:
            return True
        scale = self._eigen_scale
        if (scale[-1] / scale[0]) ** 2 > CONDITION_LIMIT:
            return True
        if self.sigma * scale[-1] < MIN_SCALE:
            return True
        return False
