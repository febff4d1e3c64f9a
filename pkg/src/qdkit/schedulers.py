"""The algorithm loops: MAP-Elites variants, CMA-ME, and the
gradient-arborescence algorithms, sharing one archive and one CMA-ES engine.

Each scheduler owns its archive, RNG, and optimizer state and advances one
iteration per run_iteration() call. Candidate adds are applied in batch
order, which makes runs deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import AddResult, AddStatus, GridArchive
from .cma_es import CmaEs
from .domains import Domain
from .exceptions import ConfigError, DegenerateStateError
from .variation import AdamState, adam_step, gaussian_perturb, normalize_gradient

ALGORITHM_NAMES = (
    "map_elites",
    "map_elites_line",
    "cma_me",
    "og_map_elites",
    "og_map_elites_line",
    "omg_mega",
    "cma_mega",
    "cma_mega_adam",
)

_MAP_ELITES_FAMILY = {
    "map_elites",
    "map_elites_line",
    "og_map_elites",
    "og_map_elites_line",
    "omg_mega",
}

# Step sizes per domain family, tuned for the benchmark setups.
_DEFAULT_HYPERPARAMETERS = {
    "lp": {
        "map_elites": {"sigma": 0.5},
        "map_elites_line": {"sigma1": 0.5, "sigma2": 0.2},
        "cma_me": {"sigma": 0.5},
        "og_map_elites": {"sigma": 0.5, "eta": 0.5},
        "og_map_elites_line": {"sigma1": 0.5, "sigma2": 0.2, "eta": 0.5},
        "omg_mega": {"sigma_g": 10.0},
        "cma_mega": {"sigma_g": 10.0, "eta": 1.0},
        "cma_mega_adam": {"sigma_g": 10.0, "eta": 0.002},
    },
    "arm": {
        "map_elites": {"sigma": 0.1},
        "map_elites_line": {"sigma1": 0.1, "sigma2": 0.2},
        "cma_me": {"sigma": 0.2},
        "og_map_elites": {"sigma": 0.1, "eta": 100.0},
        "og_map_elites_line": {"sigma1": 0.1, "sigma2": 0.2, "eta": 100.0},
        "omg_mega": {"sigma_g": 1.0},
        "cma_mega": {"sigma_g": 0.05, "eta": 1.0},
        "cma_mega_adam": {"sigma_g": 0.05, "eta": 0.002},
    },
}


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: str
    batch_size: int = 36
    initial_population: int = 0
    sigma: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None
    sigma_g: float | None = None
    eta: float | None = None
    abs_c0: bool = False
    og_independent_operators: bool = False
    normalize_gradients: bool = True

    def __post_init__(self):
        if self.kind not in ALGORITHM_NAMES:
            raise ConfigError(f"unknown algorithm {self.kind!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        for name in ("sigma", "sigma1", "sigma2", "sigma_g", "eta"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")


def make_algorithm_config(
    kind: str, domain_name: str, overrides: dict | None = None, **flags
) -> AlgorithmConfig:
    """Build a config with per-domain default hyperparameters applied.

    overrides maps hyperparameter names (sigma, sigma1, sigma2, sigma_g, eta,
    batch_size, initial_population) to values; flags pass through to
    AlgorithmConfig fields (normalize_gradients, og_independent_operators, ...).
    """
    if kind not in ALGORITHM_NAMES:
        raise ConfigError(f"unknown algorithm {kind!r}")
    family = "lp" if domain_name.startswith("lp") else "arm"
    values: dict = dict(_DEFAULT_HYPERPARAMETERS[family].get(kind, {}))
    values["initial_population"] = 100 if kind in _MAP_ELITES_FAMILY else 0
    values["abs_c0"] = kind == "omg_mega"
    if overrides:
        unknown = set(overrides) - {
            "sigma", "sigma1", "sigma2", "sigma_g", "eta", "batch_size", "initial_population",
        }
        if unknown:
            raise ConfigError(f"unknown hyperparameter overrides: {sorted(unknown)}")
        values.update(overrides)
    values.update(flags)
    return AlgorithmConfig(kind=kind, **values)


def improvement_rank(results: list[AddResult]) -> np.ndarray:
    """Two-stage improvement ranking, best first.

    New-cell discoveries come first (by descending objective), then
    improvements and rejections by descending improvement delta. Ties keep
    batch order.
    """
    group = {AddStatus.NEW_CELL: 0, AddStatus.IMPROVED: 1, AddStatus.REJECTED: 2}
    order = sorted(
        range(len(results)),
        key=lambda i: (group[results[i].status], -results[i].improvement),
    )
    return np.array(order, dtype=int)


def j2_rank_oracle(results: list[AddResult], big_c: float) -> np.ndarray:
    """Single-key ranking by the shifted QD-objective delta.

    A new cell contributes objective + big_c, everything else its improvement
    delta. With big_c larger than twice the objective range this reproduces
    improvement_rank exactly.
    """
    def key(i: int) -> float:
        r = results[i]
        return r.improvement + big_c if r.status is AddStatus.NEW_CELL else r.improvement

    order = sorted(range(len(results)), key=lambda i: -key(i))
    return np.array(order, dtype=int)


@dataclass(frozen=True)
class RankedBatch:
    solutions: np.ndarray  # (lambda, n)
    results: list[AddResult]
    ranking: np.ndarray

    @classmethod
    def from_adds(cls, solutions: np.ndarray, results: list[AddResult]) -> "RankedBatch":
        return cls(solutions, results, improvement_rank(results))


@dataclass(frozen=True)
class IterationStats:
    evaluations: int
    gradient_evaluations: int
    archive_changed: bool
    restarted: bool = False


class Scheduler:
    """Base for all algorithm loops; owns cumulative evaluation counters."""

    def __init__(self, config: AlgorithmConfig, archive: GridArchive, domain: Domain,
                 rng: np.random.Generator):
        self.config = config
        self.archive = archive
        self.domain = domain
        self.rng = rng
        self.evaluations = 0
        self.gradient_evaluations = 0

    @property
    def evaluations_per_iteration(self) -> int:
        raise NotImplementedError

    def seed_archive(self) -> int:
        """Populate the archive with standard-normal samples; returns evals used."""
        count = self.config.initial_population
        if count <= 0:
            return 0
        solutions = self.rng.standard_normal((count, self.domain.n))
        ev = self.domain.evaluate_batch(solutions)
        for i in range(count):
            self.archive.add(solutions[i], ev.objective[i], ev.measures[i])
        self.evaluations += count
        return count

    def run_iteration(self) -> IterationStats:
        raise NotImplementedError

    def _add_batch(self, solutions: np.ndarray, ev) -> list[AddResult]:
        return [
            self.archive.add(solutions[i], ev.objective[i], ev.measures[i])
            for i in range(solutions.shape[0])
        ]

    def _parent_matrix(self, count: int) -> np.ndarray:
        elites = self.archive.sample_elites(count, self.rng)
        return np.stack([e.solution for e in elites])

    # gradient used by objective-gradient steps: eta is calibrated against the
    # raw (untransformed) objective scale
    def _raw_scale(self) -> float:
        return self.domain.f_max / 100.0


def _iso_line_batch(parents: np.ndarray, partners: np.ndarray, sigma1: float,
                    sigma2: float, rng: np.random.Generator) -> np.ndarray:
    noise = sigma1 * rng.standard_normal(parents.shape)
    line = sigma2 * rng.standard_normal((parents.shape[0], 1))
    return parents + noise + line * (parents - partners)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Unit-normalize along the last axis, zeroing near-zero vectors."""
    norms = np.linalg.norm(matrix, axis=-1, keepdims=True)
    return np.where(norms > 1e-12, matrix / np.where(norms == 0, 1.0, norms), 0.0)


class MapElitesScheduler(Scheduler):
    """Uniform elite selection with isotropic Gaussian perturbation."""

    @property
    def evaluations_per_iteration(self) -> int:
        return self.config.batch_size

    def run_iteration(self) -> IterationStats:
        lam = self.config.batch_size
        offspring = gaussian_perturb(self._parent_matrix(lam), self.config.sigma, self.rng)
        ev = self.domain.evaluate_batch(offspring)
        results = self._add_batch(offspring, ev)
        self.evaluations += lam
        return IterationStats(lam, 0, any(r.changed_archive for r in results))


class MapElitesLineScheduler(Scheduler):
    """MAP-Elites with the Iso+LineDD operator over two sampled elites."""

    @property
    def evaluations_per_iteration(self) -> int:
        return self.config.batch_size

    def run_iteration(self) -> IterationStats:
        lam = self.config.batch_size
        parents = self._parent_matrix(lam)
        partners = self._parent_matrix(lam)
        offspring = _iso_line_batch(parents, partners, self.config.sigma1,
                                    self.config.sigma2, self.rng)
        ev = self.domain.evaluate_batch(offspring)
        results = self._add_batch(offspring, ev)
        self.evaluations += lam
        return IterationStats(lam, 0, any(r.changed_archive for r in results))


class OgMapElitesScheduler(Scheduler):
    """Perturbation plus an objective-gradient step on each perturbed candidate.

    The sequential mode (default) reuses the perturbed candidate's evaluation
    for its gradient; the independent-operators mode splits the 2*lambda
    evaluation budget into thirds (perturb / gradient re-evaluation / stepped
    candidate) and pays for gradients with evaluations.
    """

    line = False

    @property
    def evaluations_per_iteration(self) -> int:
        lam = self.config.batch_size
        if self.config.og_independent_operators:
            return 3 * ((2 * lam) // 3)
        return 2 * lam

    def _perturb(self, count: int) -> np.ndarray:
        if self.line:
            return _iso_line_batch(self._parent_matrix(count), self._parent_matrix(count),
                                   self.config.sigma1, self.config.sigma2, self.rng)
        return gaussian_perturb(self._parent_matrix(count), self.config.sigma, self.rng)

    def run_iteration(self) -> IterationStats:
        if self.config.og_independent_operators:
            return self._run_independent()
        return self._run_sequential()

    def _run_sequential(self) -> IterationStats:
        lam = self.config.batch_size
        perturbed = self._perturb(lam)
        ev1 = self.domain.evaluate_batch(perturbed, with_gradients=True)
        results = self._add_batch(perturbed, ev1)

        stepped = perturbed + self.config.eta * self._raw_scale() * ev1.grad_objective
        ev2 = self.domain.evaluate_batch(stepped)
        results += self._add_batch(stepped, ev2)
        self.evaluations += 2 * lam
        self.gradient_evaluations += lam
        return IterationStats(2 * lam, lam, any(r.changed_archive for r in results))

    def _run_independent(self) -> IterationStats:
        third = (2 * self.config.batch_size) // 3
        perturbed = self._perturb(third)
        ev1 = self.domain.evaluate_batch(perturbed)
        results = self._add_batch(perturbed, ev1)

        # gradient third: re-evaluate archive elites, no archive update
        parents = self._parent_matrix(third)
        ev2 = self.domain.evaluate_batch(parents, with_gradients=True)

        stepped = parents + self.config.eta * self._raw_scale() * ev2.grad_objective
        ev3 = self.domain.evaluate_batch(stepped)
        results += self._add_batch(stepped, ev3)
        self.evaluations += 3 * third
        self.gradient_evaluations += third
        return IterationStats(3 * third, third, any(r.changed_archive for r in results))


class OgMapElitesLineScheduler(OgMapElitesScheduler):
    line = True


class OmgMegaScheduler(Scheduler):
    """Branches each sampled elite along coefficient-weighted gradient steps.

    Coefficients are drawn from a fixed isotropic Gaussian; the objective
    coefficient is taken in absolute value so steps never descend the
    objective.
    """

    @property
    def evaluations_per_iteration(self) -> int:
        return 2 * self.config.batch_size

    def run_iteration(self) -> IterationStats:
        lam = self.config.batch_size
        k = self.domain.measure_dims
        parents = self._parent_matrix(lam)
        ev = self.domain.evaluate_batch(parents, with_gradients=True)

        if self.config.normalize_gradients:
            grad_obj = _normalize_rows(ev.grad_objective)
            grad_mes = _normalize_rows(ev.grad_measures)
        else:
            grad_obj = self._raw_scale() * ev.grad_objective
            grad_mes = ev.grad_measures

        coeffs = self.config.sigma_g * self.rng.standard_normal((lam, k + 1))
        c0 = np.abs(coeffs[:, 0]) if self.config.abs_c0 else coeffs[:, 0]
        offspring = (
            parents
            + c0[:, None] * grad_obj
            + np.einsum("bk,bkn->bn", coeffs[:, 1:], grad_mes)
        )
        ev_off = self.domain.evaluate_batch(offspring)
        results = self._add_batch(offspring, ev_off)
        self.evaluations += 2 * lam
        self.gradient_evaluations += lam
        return IterationStats(2 * lam, lam, any(r.changed_archive for r in results))


class CmaMeScheduler(Scheduler):
    """CMA-ES over parameter space, ranked by archive improvement.

    Restarts from a uniformly random elite when a full batch fails to change
    the archive or the optimizer state degenerates.
    """

    def __init__(self, config, archive, domain, rng):
        super().__init__(config, archive, domain, rng)
        self.cma = CmaEs(domain.n, config.sigma, config.batch_size)
        self.restarts = 0

    @property
    def evaluations_per_iteration(self) -> int:
        return self.config.batch_size

    def _restart(self) -> None:
        elite = self.archive.sample_elites(1, self.rng)[0]
        self.cma = CmaEs(self.domain.n, self.config.sigma, self.config.batch_size,
                         mean=elite.solution)
        self.restarts += 1

    def run_iteration(self) -> IterationStats:
        lam = self.config.batch_size
        try:
            samples = self.cma.ask(self.rng)
        except DegenerateStateError:
            self._restart()
            samples = self.cma.ask(self.rng)
        ev = self.domain.evaluate_batch(samples)
        batch = RankedBatch.from_adds(samples, self._add_batch(samples, ev))
        self.cma.tell(samples, batch.ranking)
        self.evaluations += lam

        changed = any(r.changed_archive for r in batch.results)
        restarted = False
        if not changed or self.cma.is_degenerate():
            self._restart()
            restarted = True
        return IterationStats(lam, 0, changed, restarted)


class CmaMegaScheduler(Scheduler):
    """Adapts gradient-step coefficients with CMA-ES while walking a single
    search point by the improvement-weighted mean of the branched steps."""

    adam = False

    def __init__(self, config, archive, domain, rng):
        super().__init__(config, archive, domain, rng)
        self.theta = np.zeros(domain.n)
        self.cma = CmaEs(domain.measure_dims + 1, config.sigma_g, config.batch_size)
        self.adam_state = AdamState(domain.n) if self.adam else None
        self.restarts = 0

    @property
    def evaluations_per_iteration(self) -> int:
        return self.config.batch_size + 1

    def _restart(self) -> None:
        self.cma = CmaEs(self.domain.measure_dims + 1, self.config.sigma_g,
                         self.config.batch_size)
        elite = self.archive.sample_elites(1, self.rng)[0]
        self.theta = np.array(elite.solution)
        if self.adam:
            self.adam_state = AdamState(self.domain.n)
        self.restarts += 1

    def run_iteration(self) -> IterationStats:
        lam = self.config.batch_size
        ev = self.domain.evaluate(self.theta, with_gradients=True)
        grad_obj = normalize_gradient(ev.grad_objective)
        grad_mes = _normalize_rows(ev.grad_measures)
        result_theta = self.archive.add(self.theta, ev.objective, ev.measures)

        try:
            coeffs = self.cma.ask(self.rng)
        except DegenerateStateError:
            self._restart()
            self.evaluations += 1
            self.gradient_evaluations += 1
            return IterationStats(1, 1, result_theta.changed_archive, True)

        gradients = np.vstack([grad_obj[None, :], grad_mes])  # (k+1, n)
        if self.config.abs_c0:
            coeffs_step = coeffs.copy()
            coeffs_step[:, 0] = np.abs(coeffs_step[:, 0])
        else:
            coeffs_step = coeffs
        steps = coeffs_step @ gradients  # (lambda, n)
        offspring = self.theta + steps
        ev_off = self.domain.evaluate_batch(offspring)
        batch = RankedBatch.from_adds(offspring, self._add_batch(offspring, ev_off))

        step = self.cma.weights @ steps[batch.ranking]
        if self.adam:
            self.theta, self.adam_state = adam_step(
                self.adam_state, self.theta, step, self.config.eta
            )
        else:
            self.theta = self.theta + self.config.eta * step
        self.cma.tell(coeffs, batch.ranking)
        self.evaluations += lam + 1
        self.gradient_evaluations += 1

        changed = result_theta.changed_archive or any(
            r.changed_archive for r in batch.results
        )
        restarted = False
        if not changed or self.cma.is_degenerate():
            self._restart()
            restarted = True
        return IterationStats(lam + 1, 1, changed, restarted)


class CmaMegaAdamScheduler(CmaMegaScheduler):
    adam = True


_SCHEDULERS = {
    "map_elites": MapElitesScheduler,
    "map_elites_line": MapElitesLineScheduler,
    "cma_me": CmaMeScheduler,
    "og_map_elites": OgMapElitesScheduler,
    "og_map_elites_line": OgMapElitesLineScheduler,
    "omg_mega": OmgMegaScheduler,
    "cma_mega": CmaMegaScheduler,
    "cma_mega_adam": CmaMegaAdamScheduler,
}


def make_scheduler(config: AlgorithmConfig, archive: GridArchive, domain: Domain,
                   rng: np.random.Generator) -> Scheduler:
    return _SCHEDULERS[config.kind](config, archive, domain, rng)
