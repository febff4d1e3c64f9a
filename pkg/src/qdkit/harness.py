"""Multi-trial experiment runner: seeding, metrics logging, CSV export,
and mean/standard-error summaries.

Trial t always uses seed base_seed + t, so any trial can be reproduced in
isolation and reruns are byte-identical. Trials may run in parallel; file
contents never depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .archive import GridArchive
from .domains import make_domain
from .exceptions import ConfigError
from .schedulers import make_algorithm_config, make_scheduler

METRICS_HEADER = ("trial", "iteration", "evaluations", "qd_score", "coverage", "best")
SUMMARY_HEADER = (
    "algorithm",
    "domain",
    "qd_score_mean",
    "qd_score_se",
    "coverage_mean",
    "coverage_se",
    "best_mean",
    "best_se",
)


@dataclass
class ExperimentConfig:
    domain: str
    algorithm: str
    n: int | None = None  # None -> domain default (1000)
    iterations: int = 10_000
    trials: int = 20
    base_seed: int = 0
    resolution: tuple[int, int] | None = None  # None -> domain default (100x100)
    hyperparameters: dict = field(default_factory=dict)
    normalize_gradients: bool = True
    og_independent_operators: bool = False
    logging_period: int = 100
    output_dir: str = "out"
    workers: int | None = None  # None -> cpu count
    include_solutions: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.logging_period < 1:
            raise ConfigError(f"logging_period must be >= 1, got {self.logging_period}")
        if self.resolution is not None:
            self.resolution = tuple(int(r) for r in self.resolution)
            if any(r <= 0 for r in self.resolution):
                raise ConfigError(f"resolution must be positive, got {self.resolution}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        unknown = set(data) - {f.name for f in cls.__dataclass_fields__.values()}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrialResult:
    trial: int
    rows: list[tuple]  # metrics rows (iteration, evaluations, qd, coverage, best)
    final_qd_score: float
    final_coverage: float
    final_best: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]
    summary: dict
    output_dir: Path


def _fmt(value) -> str:
    return repr(float(value))


def heatmap_export(archive: GridArchive, path) -> None:
    """Dense objective matrix: one CSV row per measure-1 bin (lowest first),
    one column per measure-0 bin; empty cells emit the literal nan."""
    grid = archive.objective_grid().T  # rows indexed by measure-1 bin
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in grid:
            writer.writerow([_fmt(v) for v in row])


def load_heatmap_csv(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as f:
        return np.array([[float(v) for v in row] for row in csv.reader(f)])


def attainment_curve(archive: GridArchive) -> np.ndarray:
    """(threshold, fraction of all cells with objective >= threshold) for
    integer thresholds 0..100."""
    objectives = np.sort(np.array([e.objective for e in archive.elites()]))
    thresholds = np.arange(0, 101, dtype=float)
    if objectives.size:
        counts = objectives.size - np.searchsorted(objectives, thresholds, side="left")
    else:
        counts = np.zeros_like(thresholds)
    return np.column_stack([thresholds, counts / archive.num_cells])


def trial_paths(output_dir, trial: int) -> dict[str, Path]:
    base = Path(output_dir)
    return {
        "metrics": base / f"trial_{trial:03d}_metrics.csv",
        "archive": base / f"trial_{trial:03d}_archive.csv",
        "heatmap": base / f"trial_{trial:03d}_heatmap.csv",
    }


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    """Run one seeded trial and write its metrics/archive/heatmap files."""
    rng = np.random.default_rng(config.base_seed + trial)
    domain = make_domain(config.domain, config.n)
    archive = GridArchive(domain.archive_config(config.resolution))
    algo_config = make_algorithm_config(
        config.algorithm,
        config.domain,
        config.hyperparameters,
        normalize_gradients=config.normalize_gradients,
        og_independent_operators=config.og_independent_operators,
    )
    scheduler = make_scheduler(algo_config, archive, domain, rng)
    scheduler.seed_archive()

    rows = []

    def log(iteration: int) -> None:
        m = archive.metrics()
        rows.append((iteration, scheduler.evaluations, m.qd_score, m.coverage, m.best))

    log(0)
    for iteration in range(1, config.iterations + 1):
        scheduler.run_iteration()
        if iteration % config.logging_period == 0 or iteration == config.iterations:
            log(iteration)

    paths = trial_paths(config.output_dir, trial)
    with open(paths["metrics"], "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for iteration, evals, qd, cov, best in rows:
            writer.writerow([trial, iteration, evals, _fmt(qd), _fmt(cov), _fmt(best)])
    archive.export(paths["archive"], include_solutions=config.include_solutions)
    heatmap_export(archive, paths["heatmap"])

    final = archive.metrics()
    return TrialResult(trial, rows, final.qd_score, final.coverage, final.best)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, se


def summarize(config: ExperimentConfig, trials: list[TrialResult]) -> dict:
    qd = np.array([t.final_qd_score for t in trials])
    cov = np.array([t.final_coverage for t in trials])
    best = np.array([t.final_best for t in trials])
    qd_mean, qd_se = _mean_se(qd)
    cov_mean, cov_se = _mean_se(cov)
    best_mean, best_se = _mean_se(best)
    return {
        "algorithm": config.algorithm,
        "domain": config.domain,
        "qd_score_mean": qd_mean,
        "qd_score_se": qd_se,
        "coverage_mean": cov_mean,
        "coverage_se": cov_se,
        "best_mean": best_mean,
        "best_se": best_se,
    }


def _trial_task(args) -> TrialResult:
    config, trial = args
    return run_trial(config, trial)


def run_experiment(config: ExperimentConfig, verbose: bool = False) -> ExperimentResult:
    """Run all trials, write per-trial files plus summary.csv and config.json."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump(asdict(config), f, indent=2, sort_keys=True)
        f.write("\n")

    workers = config.workers if config.workers is not None else (os.cpu_count() or 1)
    workers = max(1, min(workers, config.trials))
    tasks = [(config, t) for t in range(config.trials)]
    started = time.perf_counter()
    if workers == 1:
        results = []
        for task in tasks:
            results.append(_trial_task(task))
            if verbose:
                elapsed = time.perf_counter() - started
                print(f"  trial {task[1]} done ({elapsed:.1f}s elapsed)", flush=True)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_task, tasks))
    results.sort(key=lambda r: r.trial)

    summary = summarize(config, results)
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        writer.writerow(
            [summary["algorithm"], summary["domain"]]
            + [_fmt(summary[k]) for k in SUMMARY_HEADER[2:]]
        )
    if verbose:
        print(
            f"{config.algorithm} on {config.domain}: "
            f"qd_score {summary['qd_score_mean']:.2f} ± {summary['qd_score_se']:.2f}, "
            f"coverage {100 * summary['coverage_mean']:.2f}% ± {100 * summary['coverage_se']:.2f}%, "
            f"best {summary['best_mean']:.2f} ± {summary['best_se']:.2f} "
            f"({time.perf_counter() - started:.1f}s)",
            flush=True,
        )
    return ExperimentResult(config, results, summary, out)
