"""Analytic benchmark domains with exact objective and measure gradients.

Two families are provided:

* linear projection — sphere or Rastrigin objective over an offset input,
  with measures formed by clipped sums of the first and second half of the
  solution components;
* arm repertoire — a planar arm with unit links, minimizing joint-angle
  variance while the measures are the end-effector position from forward
  kinematics.

Raw objectives are minimized; archives store the affine-transformed value
f' = 100 * (1 - f_raw / f_max), so 100 is optimal and 0 matches the
estimated worst value. Gradients returned by the domains are gradients of
the transformed objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import ArchiveConfig
from .exceptions import ConfigError

CLIP_BOUND = 5.12
LP_OFFSET = 2.048  # 5.12 * 0.4, moves the optimum away from the center


@dataclass(frozen=True)
class Evaluation:
    """Evaluation of a single solution.

    grad_objective is d f'/d theta (transformed scale); grad_measures has one
    row per measure. Both are None when gradients were not requested.
    """

    objective: float
    measures: np.ndarray
    grad_objective: np.ndarray | None = None
    grad_measures: np.ndarray | None = None


@dataclass(frozen=True)
class BatchEvaluation:
    objective: np.ndarray  # (b,)
    measures: np.ndarray  # (b, k)
    grad_objective: np.ndarray | None = None  # (b, n)
    grad_measures: np.ndarray | None = None  # (b, k, n)

    def single(self, i: int) -> Evaluation:
        return Evaluation(
            objective=float(self.objective[i]),
            measures=self.measures[i],
            grad_objective=None if self.grad_objective is None else self.grad_objective[i],
            grad_measures=None if self.grad_measures is None else self.grad_measures[i],
        )


@dataclass(frozen=True)
class DomainSpec:
    name: str
    n: int
    measure_dims: int
    measure_lower: np.ndarray
    measure_upper: np.ndarray
    default_resolution: tuple[int, ...]
    f_max: float


def transform_objective(f_raw, f_max: float):
    """Map a raw minimization value into [0, 100] (affine, not clamped).

    Returns the transformed objective and the scale that maps raw gradients
    to transformed gradients.
    """
    if f_max <= 0:
        raise ConfigError(f"f_max must be positive, got {f_max}")
    scale = -100.0 / f_max
    return 100.0 * (1.0 - f_raw / f_max), scale


def clip(x):
    """Bound a measure contribution: identity inside [-5.12, 5.12], else 5.12/x."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= CLIP_BOUND, x, CLIP_BOUND / np.where(x == 0, 1.0, x))
    return out if out.ndim else float(out)


def clip_grad(x):
    """Derivative of clip; the kink at |x| = 5.12 takes the interior value 1."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= CLIP_BOUND, 1.0, -CLIP_BOUND / np.where(x == 0, 1.0, x) ** 2)
    return out if out.ndim else float(out)


class Domain:
    """Base class; subclasses fill in _evaluate_batch."""

    name: str
    n: int
    measure_dims: int = 2
    measure_lower: np.ndarray
    measure_upper: np.ndarray
    default_resolution: tuple[int, ...] = (100, 100)
    f_max: float

    def spec(self) -> DomainSpec:
        return DomainSpec(
            name=self.name,
            n=self.n,
            measure_dims=self.measure_dims,
            measure_lower=self.measure_lower,
            measure_upper=self.measure_upper,
            default_resolution=self.default_resolution,
            f_max=self.f_max,
        )

    def archive_config(self, resolution: tuple[int, ...] | None = None) -> ArchiveConfig:
        return ArchiveConfig(
            lower_bounds=self.measure_lower,
            upper_bounds=self.measure_upper,
            resolution=resolution or self.default_resolution,
        )

    def evaluate_batch(self, thetas: np.ndarray, with_gradients: bool = False) -> BatchEvaluation:
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim != 2 or thetas.shape[1] != self.n:
            raise ConfigError(f"expected batch of shape (b, {self.n}), got {thetas.shape}")
        return self._evaluate_batch(thetas, with_gradients)

    def evaluate(self, theta: np.ndarray, with_gradients: bool = True) -> Evaluation:
        theta = np.asarray(theta, dtype=float)
        return self.evaluate_batch(theta[None, :], with_gradients).single(0)

    def _evaluate_batch(self, thetas: np.ndarray, with_gradients: bool) -> BatchEvaluation:
        raise NotImplementedError


class LinearProjectionDomain(Domain):
    """Sphere or Rastrigin objective with clipped-projection measures.

    The objective input is offset (x = theta - 2.048); the measures use the
    unoffset components. Each measure axis spans ±5.12·n/2, reachable only
    when every component of the owning half sits at the clip extremum.
    """

    def __init__(self, objective_kind: str, n: int = 1000):
        if objective_kind not in ("sphere", "rastrigin"):
            raise ConfigError(f"unknown objective kind: {objective_kind!r}")
        if n < 2 or n % 2 != 0:
            raise ConfigError(f"linear projection requires even n >= 2, got {n}")
        self.objective_kind = objective_kind
        self.n = n
        self.name = f"lp_{objective_kind}"
        half_range = CLIP_BOUND * (n / 2)
        self.measure_lower = np.array([-half_range, -half_range])
        self.measure_upper = np.array([half_range, half_range])
        # worst value estimate: all components at -5.12
        worst = np.full(n, -CLIP_BOUND)
        self.f_max = float(self._raw_objective(worst[None, :])[0][0])

    def _raw_objective(self, thetas):
        x = thetas - LP_OFFSET
        if self.objective_kind == "sphere":
            raw = np.einsum("bi,bi->b", x, x)
            grad = 2.0 * x
        else:
            raw = 10.0 * self.n + (x * x - 10.0 * np.cos(2.0 * np.pi * x)).sum(axis=1)
            grad = 2.0 * x + 20.0 * np.pi * np.sin(2.0 * np.pi * x)
        return raw, grad

    def _evaluate_batch(self, thetas, with_gradients):
        b, n = thetas.shape
        half = n // 2
        raw, grad_raw = self._raw_objective(thetas)
        objective, scale = transform_objective(raw, self.f_max)

        inside = np.abs(thetas) <= CLIP_BOUND
        safe = np.where(inside, 1.0, thetas)
        clipped = np.where(inside, thetas, CLIP_BOUND / safe)
        measures = np.empty((b, 2))
        measures[:, 0] = clipped[:, :half].sum(axis=1)
        measures[:, 1] = clipped[:, half:].sum(axis=1)

        grad_objective = grad_measures = None
        if with_gradients:
            grad_objective = scale * grad_raw
            cg = np.where(inside, 1.0, -CLIP_BOUND / (safe * safe))
            grad_measures = np.zeros((b, 2, n))
            grad_measures[:, 0, :half] = cg[:, :half]
            grad_measures[:, 1, half:] = cg[:, half:]
        return BatchEvaluation(objective, measures, grad_objective, grad_measures)


class ArmDomain(Domain):
    """Planar arm with n unit links; objective is joint-angle variance.

    Measures are the end-effector coordinates; the reachable set is the disk
    of radius n, so at most pi/4 of the square archive can ever fill.
    """

    f_max = 1.0  # variance scale estimated from a standard-normal population

    def __init__(self, n: int = 1000):
        if n < 1:
            raise ConfigError(f"arm requires n >= 1, got {n}")
        self.n = n
        self.name = "arm"
        self.measure_lower = np.array([-float(n), -float(n)])
        self.measure_upper = np.array([float(n), float(n)])

    def _evaluate_batch(self, thetas, with_gradients):
        b, n = thetas.shape
        mean = thetas.mean(axis=1, keepdims=True)
        dev = thetas - mean
        variance = np.einsum("bi,bi->b", dev, dev) / n
        objective, scale = transform_objective(variance, self.f_max)

        # extended-precision cumulative angles keep FK gradients accurate at large n
        prefix = np.cumsum(thetas.astype(np.longdouble), axis=1).astype(np.float64)
        cosines = np.cos(prefix)
        sines = np.sin(prefix)
        measures = np.empty((b, 2))
        measures[:, 0] = cosines.sum(axis=1)
        measures[:, 1] = sines.sum(axis=1)

        grad_objective = grad_measures = None
        if with_gradients:
            grad_objective = scale * (2.0 / n) * dev
            grad_measures = np.empty((b, 2, n))
            # d x / d theta_i = -sum_{j >= i} sin(prefix_j), d y / d theta_i = sum_{j >= i} cos(prefix_j)
            grad_measures[:, 0, :] = -np.cumsum(sines[:, ::-1], axis=1)[:, ::-1]
            grad_measures[:, 1, :] = np.cumsum(cosines[:, ::-1], axis=1)[:, ::-1]
        return BatchEvaluation(objective, measures, grad_objective, grad_measures)


def lp_eval(theta: np.ndarray, objective_kind: str) -> Evaluation:
    """Evaluate one solution in the linear projection domain (with gradients)."""
    theta = np.asarray(theta, dtype=float)
    return LinearProjectionDomain(objective_kind, n=theta.shape[0]).evaluate(theta)


def arm_eval(theta: np.ndarray) -> Evaluation:
    """Evaluate one solution in the arm repertoire domain (with gradients)."""
    theta = np.asarray(theta, dtype=float)
    return ArmDomain(n=theta.shape[0]).evaluate(theta)


DOMAIN_NAMES = ("lp_sphere", "lp_rastrigin", "arm")


def make_domain(name: str, n: int | None = None) -> Domain:
    """Construct a registered domain by name (default n = 1000)."""
    n = 1000 if n is None else n
    if name == "lp_sphere":
        return LinearProjectionDomain("sphere", n)
    if name == "lp_rastrigin":
        return LinearProjectionDomain("rastrigin", n)
    if name == "arm":
        return ArmDomain(n)
    raise ConfigError(f"unknown domain {name!r}; available: {', '.join(DOMAIN_NAMES)}")
