"""Grid-tessellated archive over measure space with MAP-Elites add semantics.

The archive keeps at most one elite per grid cell. A candidate replaces the
incumbent only on strict objective improvement; the improvement value of each
add is the quantity the improvement-ranking schedulers sort on.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, EmptyArchiveError, EvaluationError


@dataclass(frozen=True)
class ArchiveConfig:
    """Tessellation of a k-dimensional measure space into a regular grid.

    lower_bounds/upper_bounds give the measure range per dimension and
    resolution the number of cells per dimension.
    """

    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        lower = np.asarray(self.lower_bounds, dtype=float)
        upper = np.asarray(self.upper_bounds, dtype=float)
        object.__setattr__(self, "lower_bounds", lower)
        object.__setattr__(self, "upper_bounds", upper)
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError("lower and upper bounds must be 1-d and equal length")
        if len(self.resolution) != lower.shape[0]:
            raise ConfigError("resolution must have one entry per measure dimension")
        if lower.shape[0] < 1:
            raise ConfigError("need at least one measure dimension")
        if not np.all(lower < upper):
            raise ConfigError("lower_bounds must be strictly below upper_bounds")
        if any(r <= 0 for r in self.resolution):
            raise ConfigError("resolution entries must be positive")

    @property
    def measure_dims(self) -> int:
        return self.lower_bounds.shape[0]

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.resolution))


class AddStatus(enum.Enum):
    NEW_CELL = "new_cell"
    IMPROVED = "improved"
    REJECTED = "rejected"


@dataclass(frozen=True)
class AddResult:
    """Outcome of one archive add.

    improvement is the candidate objective for a newly discovered cell,
    otherwise the signed difference to the incumbent objective.
    """

    status: AddStatus
    improvement: float
    cell: tuple[int, ...]

    @property
    def changed_archive(self) -> bool:
        return self.status is not AddStatus.REJECTED


@dataclass(frozen=True)
class Elite:
    solution: np.ndarray | None
    objective: float
    measures: np.ndarray


@dataclass(frozen=True)
class ArchiveMetrics:
    qd_score: float
    coverage: float
    best: float
    num_elites: int


def cell_index(measures: np.ndarray, config: ArchiveConfig) -> tuple[int, ...]:
    """Map a measure vector to its grid cell.

    Out-of-range measures are clamped to the bounds; a coordinate exactly at
    the upper bound falls into the last bin.
    """
    m = np.asarray(measures, dtype=float)
    if m.shape != (config.measure_dims,):
        raise EvaluationError(f"expected {config.measure_dims} measures, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise EvaluationError(f"non-finite measures: {m}")
    lower, upper = config.lower_bounds, config.upper_bounds
    clamped = np.minimum(np.maximum(m, lower), upper)
    res = np.asarray(config.resolution)
    bins = np.floor((clamped - lower) / (upper - lower) * res).astype(int)
    bins = np.minimum(bins, res - 1)  # fold the upper boundary into the last bin
    return tuple(int(b) for b in bins)


class GridArchive:
    """One elite per cell; strict-improvement replacement; O(1) metrics."""

    def __init__(self, config: ArchiveConfig):
        self.config = config
        M = config.num_cells
        self._occupied = np.zeros(M, dtype=bool)
        self._objective = np.zeros(M, dtype=float)
        self._measures = np.zeros((M, config.measure_dims), dtype=float)
        self._solutions: dict[int, np.ndarray | None] = {}
        self._occupied_flat: list[int] = []
        self._objective_sum = 0.0
        self._best = 0.0

    def __len__(self) -> int:
        return len(self._occupied_flat)

    @property
    def num_cells(self) -> int:
        return self.config.num_cells

    def _flat(self, cell: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(cell, self.config.resolution))

    def cell_index(self, measures: np.ndarray) -> tuple[int, ...]:
        return cell_index(measures, self.config)

    def add(self, solution: np.ndarray | None, objective: float, measures: np.ndarray) -> AddResult:
        """Insert a candidate, returning its status and improvement value.

        Any finite objective claims an empty cell; occupied cells are only
        replaced on strict improvement.
        """
        objective = float(objective)
        if not np.isfinite(objective):
            raise EvaluationError(f"non-finite objective: {objective}")
        cell = self.cell_index(measures)
        flat = self._flat(cell)
        clamped = np.minimum(
            np.maximum(np.asarray(measures, dtype=float), self.config.lower_bounds),
            self.config.upper_bounds,
        )

        if not self._occupied[flat]:
            self._occupied[flat] = True
            self._objective[flat] = objective
            self._measures[flat] = clamped
            self._store_solution(flat, solution)
            self._occupied_flat.append(flat)
            self._objective_sum += objective
            self._best = max(self._best, objective)
            return AddResult(AddStatus.NEW_CELL, objective, cell)

        delta = objective - self._objective[flat]
        if delta > 0:
            self._objective_sum += delta
            self._objective[flat] = objective
            self._measures[flat] = clamped
            self._store_solution(flat, solution)
            self._best = max(self._best, objective)
            return AddResult(AddStatus.IMPROVED, delta, cell)
        return AddResult(AddStatus.REJECTED, delta, cell)

    def _store_solution(self, flat: int, solution: np.ndarray | None) -> None:
        if solution is None:
            self._solutions[flat] = None
        else:
            stored = np.array(solution, dtype=float)
            stored.setflags(write=False)
            self._solutions[flat] = stored

    def metrics(self) -> ArchiveMetrics:
        """QD-score (objective sum normalized by archive size), coverage, best."""
        M = self.num_cells
        n = len(self._occupied_flat)
        return ArchiveMetrics(
            qd_score=self._objective_sum / M,
            coverage=n / M,
            best=self._best if n else 0.0,
            num_elites=n,
        )

    def _elite_at(self, flat: int) -> Elite:
        return Elite(
            solution=self._solutions[flat],
            objective=float(self._objective[flat]),
            measures=self._measures[flat].copy(),
        )

    def sample_elites(self, count: int, rng: np.random.Generator) -> list[Elite]:
        """Draw elites uniformly with replacement from the filled cells."""
        if count == 0:
            return []
        if not self._occupied_flat:
            raise EmptyArchiveError("cannot sample from an empty archive")
        picks = rng.integers(0, len(self._occupied_flat), size=count)
        return [self._elite_at(self._occupied_flat[int(i)]) for i in picks]

    def elites(self) -> list[Elite]:
        """All elites, ordered by cell index."""
        return [self._elite_at(flat) for flat in sorted(self._occupied_flat)]

    def objective_grid(self) -> np.ndarray:
        """Dense objective array shaped like the grid resolution; NaN where empty."""
        grid = np.full(self.num_cells, np.nan)
        occ = np.array(self._occupied_flat, dtype=int)
        if occ.size:
            grid[occ] = self._objective[occ]
        return grid.reshape(self.config.resolution)

    def export(self, path, include_solutions: bool = False) -> None:
        """Write one CSV row per filled cell, sorted by cell index."""
        k = self.config.measure_dims
        header = [f"cell_{j}" for j in range(k)]
        header += [f"measure_{j}" for j in range(k)]
        header += ["objective"]
        solution_dim = 0
        if include_solutions:
            dims = {s.shape[0] for s in self._solutions.values() if s is not None}
            if len(dims) > 1:
                raise ConfigError(f"mixed solution dimensions in archive: {sorted(dims)}")
            solution_dim = dims.pop() if dims else 0
            header += [f"theta_{j}" for j in range(solution_dim)]

        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for flat in sorted(self._occupied_flat):
                cell = np.unravel_index(flat, self.config.resolution)
                row = [str(int(c)) for c in cell]
                row += [repr(float(v)) for v in self._measures[flat]]
                row += [repr(float(self._objective[flat]))]
                if include_solutions:
                    sol = self._solutions[flat]
                    if sol is None:
                        raise ConfigError("archive holds elites without stored solutions")
                    row += [repr(float(v)) for v in sol]
                writer.writerow(row)


def load_archive_csv(path, config: ArchiveConfig) -> GridArchive:
    """Rebuild an archive from an export() file (solutions optional)."""
    archive = GridArchive(config)
    k = config.measure_dims
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        theta_cols = [i for i, name in enumerate(header) if name.startswith("theta_")]
        m_lo, m_hi = k, 2 * k
        obj_col = 2 * k
        for row in reader:
            measures = np.array([float(v) for v in row[m_lo:m_hi]])
            objective = float(row[obj_col])
            solution = None
            if theta_cols:
                solution = np.array([float(row[i]) for i in theta_cols])
            archive.add(solution, objective, measures)
    return archive
