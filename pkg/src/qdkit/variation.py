"""Candidate-generation primitives shared by the schedulers.

Everything here is pure except AdamState, which accumulates moment
estimates across steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

ZERO_GRAD_THRESHOLD = 1e-12  # below this norm a gradient normalizes to zero


def gaussian_perturb(theta: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian perturbation with standard deviation sigma."""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    return theta + sigma * rng.standard_normal(theta.shape)


def iso_line_dd(
    theta_i: np.ndarray,
    theta_j: np.ndarray,
    sigma1: float,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Gaussian perturbation blended with noisy interpolation toward a second elite."""
    if theta_i.shape != theta_j.shape:
        raise ConfigError("iso_line_dd parents must have matching shapes")
    noise = sigma1 * rng.standard_normal(theta_i.shape)
    line = sigma2 * rng.standard_normal() * (theta_i - theta_j)
    return theta_i + noise + line


def normalize_gradient(g: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; near-zero gradients map to the zero vector."""
    norm = float(np.linalg.norm(g))
    if norm <= ZERO_GRAD_THRESHOLD:
        return np.zeros_like(g)
    return g / norm


def arborescence_step(
    theta: np.ndarray,
    coefficients: np.ndarray,
    grad_objective: np.ndarray,
    grad_measures: np.ndarray,
    abs_c0: bool,
) -> np.ndarray:
    """Step along a coefficient-weighted combination of the (pre-normalized) gradients.

    coefficients[0] weighs the objective gradient (absolute value taken when
    abs_c0 is set); coefficients[1:] weigh the measure gradients.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.shape[0] != grad_measures.shape[0] + 1:
        raise ConfigError(
            f"need {grad_measures.shape[0] + 1} coefficients, got {c.shape[0]}"
        )
    c0 = abs(c[0]) if abs_c0 else c[0]
    return theta + c0 * grad_objective + c[1:] @ grad_measures


def ascent_step(theta: np.ndarray, g: np.ndarray, eta: float) -> np.ndarray:
    """Plain gradient ascent step."""
    return theta + eta * g


@dataclass
class AdamState:
    """First/second moment estimates for Adam."""

    dim: int
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        self.m = np.zeros(self.dim)
        self.v = np.zeros(self.dim)


def adam_step(
    state: AdamState, theta: np.ndarray, g: np.ndarray, eta: float
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step applied as gradient ascent.

    Mutates and returns the same state object.
    """
    if eta <= 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    theta_new = theta + eta * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return theta_new, state
