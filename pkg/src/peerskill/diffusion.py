"""Projected Laplacian diffusion of ratings with a positive Gaussian drift.

Each step applies ``r <- clip(r - c L r + eps, r_min, r_max)`` where ``eps``
is drawn i.i.d. ``N(drift_mean, drift_std**2)`` per node. Randomness comes
from PCG64 generators; each realization owns the stream
``SeedSequence(seed, spawn_key=(index,))`` so results do not depend on the
order in which realizations run.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._validation import check_random_state, check_signal
from .graph import InteractionGraph, LaplacianMatrix, build_laplacian, total_variation

__all__ = [
    "DiffusionConfig",
    "TrajectoryStats",
    "generate_er_graph",
    "step",
    "simulate",
    "simulate_realization",
    "realization_rng",
]


@dataclass(frozen=True)
class DiffusionConfig:
    """Simulation parameters. Defaults follow the ROC Speak-like protocol."""

    n: int = 26
    edge_prob: float = 0.5
    c: float = 0.01
    drift_mean: float = 0.05
    drift_std: float = 0.1
    r_min: float = 1.0
    r_max: float = 5.0
    horizon: int = 100
    realizations: int = 1000
    seed: int = 0

    def problems(self) -> list[str]:
        """Every violated constraint, so callers can report them together."""
        out = []
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            out.append(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.edge_prob <= 1.0:
            out.append(f"edge_prob must lie in [0, 1], got {self.edge_prob!r}")
        if not (np.isfinite(self.c) and self.c > 0):
            out.append(f"c must be positive, got {self.c!r}")
        if not np.isfinite(self.drift_mean):
            out.append(f"drift_mean must be finite, got {self.drift_mean!r}")
        if not (np.isfinite(self.drift_std) and self.drift_std >= 0):
            out.append(f"drift_std must be >= 0, got {self.drift_std!r}")
        if not (np.isfinite(self.r_min) and np.isfinite(self.r_max) and self.r_min < self.r_max):
            out.append(f"need r_min < r_max, got [{self.r_min!r}, {self.r_max!r}]")
        if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 1:
            out.append(f"horizon must be >= 1, got {self.horizon!r}")
        if not isinstance(self.realizations, (int, np.integer)) or self.realizations < 1:
            out.append(f"realizations must be >= 1, got {self.realizations!r}")
        if self.edge_prob == 1.0 and self.n >= 2 and self.c >= 1.0 / (self.n - 1):
            # complete graphs have d_max = n - 1 at every prompt
            out.append(f"c={self.c} is inadmissible on complete graphs of {self.n} nodes")
        return out

    def validate(self) -> "DiffusionConfig":
        problems = self.problems()
        if problems:
            raise ValueError("invalid diffusion config: " + "; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrajectoryStats:
    """Per-prompt Monte Carlo averages (index 0 is prompt 1)."""

    total_variation: np.ndarray
    normalized_tv: np.ndarray
    mean_rating: np.ndarray
    traces: dict | None = field(default=None, repr=False)

    @property
    def horizon(self) -> int:
        return self.mean_rating.shape[0]

    def to_rows(self) -> list[tuple]:
        return [
            (p + 1, float(tv), float(ntv), float(mr))
            for p, (tv, ntv, mr) in enumerate(
                zip(self.total_variation, self.normalized_tv, self.mean_rating)
            )
        ]


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return check_random_state(np.random.SeedSequence(seed, spawn_key=(index,)))


def generate_er_graph(n: int, edge_prob: float, rng) -> InteractionGraph:
    """Erdos-Renyi G(n, p) with unit weights.

    One uniform is drawn per unordered pair ``i < j`` in row-major order.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    rng = check_random_state(rng)
    iu = np.triu_indices(n, 1)
    draws = rng.random(iu[0].size)
    w = np.zeros((n, n), dtype=np.int64)
    w[iu] = draws < edge_prob
    w += w.T
    return InteractionGraph(w)


def _check_admissible(c: float, d_max: float) -> None:
    if not c > 0:
        raise ValueError(f"diffusion constant must be positive, got c={c}")
    if d_max > 0 and not c < 1.0 / d_max:
        raise ValueError(
            f"diffusion constant c={c} is inadmissible: need c < 1/d_max = {1.0 / d_max:.6g} "
            f"(d_max={d_max:g})"
        )


def step(signal, laplacian: LaplacianMatrix, config: DiffusionConfig, rng=None, noise=None):
    """Advance ratings by one prompt.

    Parameters
    ----------
    signal : array of shape (n,)
    laplacian : LaplacianMatrix
        Laplacian of the current prompt's interaction graph.
    config : DiffusionConfig
        Supplies ``c``, the drift distribution and the clipping interval.
    rng : seed or Generator, optional
        Source for the drift. Ignored when ``noise`` is given.
    noise : array of shape (n,), optional
        Explicit drift vector, e.g. a known realization.

    Returns
    -------
    ndarray of shape (n,)
    """
    r = check_signal(signal, laplacian.n)
    _check_admissible(config.c, laplacian.d_max)
    if noise is None:
        if config.drift_std == 0 and config.drift_mean == 0:
            eps = 0.0
        else:
            eps = check_random_state(rng).normal(config.drift_mean, config.drift_std, r.shape[0])
    else:
        eps = check_signal(noise, r.shape[0])
    return np.clip(r - config.c * (laplacian.entries @ r) + eps, config.r_min, config.r_max)


def simulate_realization(config: DiffusionConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """One trajectory; returns per-prompt raw TV and mean rating."""
    rng = check_random_state(rng)
    r = rng.uniform(config.r_min, config.r_max, config.n)
    tv = np.empty(config.horizon)
    mean = np.empty(config.horizon)
    for p in range(config.horizon):
        lap = build_laplacian(generate_er_graph(config.n, config.edge_prob, rng))
        tv[p] = total_variation(lap, r)
        mean[p] = r.mean()
        if p + 1 < config.horizon:
            r = step(r, lap, config, rng)
    return tv, mean


def simulate(config: DiffusionConfig, keep_traces: bool = False) -> TrajectoryStats:
    """Monte Carlo average of ``config.realizations`` independent trajectories.

    A fresh ER graph is drawn every prompt. Normalized TV is computed per
    realization (``tv / ||tv||``) and then averaged; realizations whose TV
    trace is identically zero contribute NaN and are skipped in the mean.
    """
    config.validate()
    tvs = np.empty((config.realizations, config.horizon))
    means = np.empty_like(tvs)
    for k in range(config.realizations):
        tvs[k], means[k] = simulate_realization(config, realization_rng(config.seed, k))
    norms = np.linalg.norm(tvs, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        ntv = np.where(norms > 0, tvs / np.where(norms > 0, norms, 1.0), np.nan)
    valid = ~np.isnan(ntv[:, 0])
    mean_ntv = ntv[valid].mean(axis=0) if valid.any() else np.full(config.horizon, np.nan)
    traces = None
    if keep_traces:
        traces = {"total_variation": tvs, "normalized_tv": ntv, "mean_rating": means}
    return TrajectoryStats(tvs.mean(axis=0), mean_ntv, means.mean(axis=0), traces)


def with_n(config: DiffusionConfig, n: int) -> DiffusionConfig:
    return replace(config, n=n)
