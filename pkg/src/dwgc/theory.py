"""Monte Carlo checks of the window-error noise decomposition.

The windowed forecast error against noisy observations splits as

    sum (yhat - y_obs)^2 = sum (yhat - y_real)^2 + sum g^2 - 2 sum g (yhat - y_real)

with g the iid observation noise. The analysis drops the cross term and
treats sum g^2 as chi-square. These helpers measure how large the dropped
term actually is relative to the kept ones, and check the chi-square
moments, by direct simulation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "NoiseDecompSample",
    "CrossTermSummary",
    "TheoryError",
    "draw_samples",
    "cross_term_ratio",
    "chi_square_moments",
    "grid_summary",
    "write_grid_json",
]


class TheoryError(ValueError):
    """Invalid simulation request."""


@dataclass(frozen=True)
class NoiseDecompSample:
    """One simulated window's decomposition terms."""

    k: int
    sigma0: float
    cross_term: float
    quad_pred: float
    quad_noise: float

    def __post_init__(self) -> None:
        if self.quad_pred < 0 or self.quad_noise < 0:
            raise TheoryError("quadratic terms cannot be negative")


@dataclass(frozen=True)
class CrossTermSummary:
    """Distribution summary of |cross| / (quad_pred + quad_noise)."""

    k: int
    sigma0: float
    n_samples: int
    mean_ratio: float
    p95_ratio: float


def _draw_terms(
    k: int, sigma0: float, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, k))
    pred_err = sigma0 * rng.standard_normal((n_samples, k))
    cross = 2.0 * np.sum(noise * pred_err, axis=1)
    quad_pred = np.sum(pred_err * pred_err, axis=1)
    quad_noise = np.sum(noise * noise, axis=1)
    return cross, quad_pred, quad_noise


def draw_samples(
    k: int, sigma0: float, n_samples: int, seed: int = 0
) -> list[NoiseDecompSample]:
    """Simulated decompositions with unit-normal noise and N(0, sigma0^2) errors."""
    cross, quad_pred, quad_noise = _draw_terms(k, sigma0, n_samples, seed)
    return [
        NoiseDecompSample(
            k=k,
            sigma0=sigma0,
            cross_term=float(c),
            quad_pred=float(qp),
            quad_noise=float(qn),
        )
        for c, qp, qn in zip(cross, quad_pred, quad_noise)
    ]


def cross_term_ratio(
    k: int, sigma0: float, n_samples: int = 10000, seed: int = 0
) -> CrossTermSummary:
    """How big the dropped cross term is next to the kept quadratic terms.

    Ratio per window: |2 sum g e| / (sum e^2 + sum g^2). Concentrates toward
    zero as k grows, which is what justifies dropping it.
    """
    if k < 2:
        raise TheoryError("k must be >= 2")
    if n_samples < 1000:
        raise TheoryError("n_samples must be >= 1000 for a stable summary")
    if sigma0 < 0:
        raise TheoryError("sigma0 must be nonnegative")
    cross, quad_pred, quad_noise = _draw_terms(k, sigma0, n_samples, seed)
    ratio = np.abs(cross) / (quad_pred + quad_noise)
    return CrossTermSummary(
        k=k,
        sigma0=sigma0,
        n_samples=n_samples,
        mean_ratio=float(ratio.mean()),
        p95_ratio=float(np.percentile(ratio, 95)),
    )


def chi_square_moments(k: int, n_samples: int = 100000, seed: int = 0) -> tuple[float, float]:
    """Sample mean and variance of sum of k squared unit normals."""
    if k < 1:
        raise TheoryError("k must be >= 1")
    rng = np.random.default_rng(seed)
    sums = np.sum(rng.standard_normal((n_samples, k)) ** 2, axis=1)
    return float(sums.mean()), float(sums.var(ddof=1))


def grid_summary(
    ks: list[int], sigma0s: list[float], n_samples: int = 10000, seed: int = 0
) -> list[CrossTermSummary]:
    """Cross-term summaries over a (k, sigma0) grid, one seed offset per cell."""
    out = []
    for idx_k, k in enumerate(ks):
        for idx_s, s in enumerate(sigma0s):
            out.append(
                cross_term_ratio(
                    k, s, n_samples=n_samples, seed=seed + 1000 * idx_k + idx_s
                )
            )
    return out


def write_grid_json(summaries: list[CrossTermSummary], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([asdict(s) for s in summaries], fh, indent=2, sort_keys=True)
