"""Figure rendering for experiment output directories.

Reads the CSV files written by the harness and renders archive heatmaps,
metric curves with standard-error bands, and attainment curves next to
them (or into a separate figure directory).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .archive import load_archive_csv
from .domains import make_domain
from .exceptions import ConfigError
from .harness import attainment_curve, load_heatmap_csv, trial_paths


def render_heatmap(matrix: np.ndarray, extent, path, title: str = "") -> Path:
    """Render a dense objective matrix (rows = measure-1 bins, lowest first)."""
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        matrix,
        origin="lower",
        extent=extent,
        aspect="auto",
        cmap="viridis",
        interpolation="nearest",
    )
    fig.colorbar(image, ax=ax, label="objective")
    ax.set_xlabel("measure 0")
    ax.set_ylabel("measure 1")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_metric_curves(
    iterations: np.ndarray, per_trial: np.ndarray, label: str, path, title: str = ""
) -> Path:
    """Mean curve with a ±1 SE band over trials; per_trial is (trials, points)."""
    mean = per_trial.mean(axis=0)
    fig, ax = plt.subplots(figsize=(6, 4))
    if per_trial.shape[0] > 1:
        se = per_trial.std(axis=0, ddof=1) / np.sqrt(per_trial.shape[0])
        ax.fill_between(iterations, mean - se, mean + se, alpha=0.3)
    ax.plot(iterations, mean)
    ax.set_xlabel("iteration")
    ax.set_ylabel(label)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_attainment(curves: list[np.ndarray], labels: list[str], path, title: str = "") -> Path:
    """Fraction of cells at or above each objective threshold, per trial."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve, label in zip(curves, labels):
        ax.plot(curve[:, 0], 100.0 * curve[:, 1], label=label)
    ax.set_xlabel("objective threshold")
    ax.set_ylabel("cells at or above threshold (%)")
    if title:
        ax.set_title(title)
    if len(labels) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def _read_metrics(path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    return {
        name: np.array([float(r[name]) for r in rows])
        for name in ("iteration", "qd_score", "coverage", "best")
    }


def render_report(output_dir, figures_dir=None) -> list[Path]:
    """Render all figures for one experiment directory; returns written paths."""
    out = Path(output_dir)
    config_path = out / "config.json"
    if not config_path.exists():
        raise ConfigError(f"{out} does not look like an experiment directory (no config.json)")
    with open(config_path, encoding="utf-8") as f:
        config = json.load(f)
    figures = Path(figures_dir) if figures_dir else out
    figures.mkdir(parents=True, exist_ok=True)

    domain = make_domain(config["domain"], config.get("n"))
    archive_config = domain.archive_config(config.get("resolution"))
    extent = (
        archive_config.lower_bounds[0],
        archive_config.upper_bounds[0],
        archive_config.lower_bounds[1],
        archive_config.upper_bounds[1],
    )
    name = f"{config['algorithm']} / {config['domain']}"

    written = []
    metric_series = []
    attainment = []
    for trial in range(config["trials"]):
        paths = trial_paths(out, trial)
        if not paths["metrics"].exists():
            raise ConfigError(f"missing trial file: {paths['metrics']}")
        metric_series.append(_read_metrics(paths["metrics"]))
        matrix = load_heatmap_csv(paths["heatmap"])
        written.append(
            render_heatmap(
                matrix, extent, figures / f"trial_{trial:03d}_heatmap.png",
                title=f"{name} (trial {trial})",
            )
        )
        attainment.append(attainment_curve(load_archive_csv(paths["archive"], archive_config)))

    iterations = metric_series[0]["iteration"]
    for metric, label in (("qd_score", "QD-score"), ("coverage", "coverage"), ("best", "best objective")):
        stacked = np.stack([m[metric] for m in metric_series])
        written.append(
            render_metric_curves(
                iterations, stacked, label, figures / f"{metric}_curve.png", title=name,
            )
        )
    written.append(
        render_attainment(
            attainment,
            [f"trial {t}" for t in range(config["trials"])],
            figures / "attainment.png",
            title=name,
        )
    )
    return written
