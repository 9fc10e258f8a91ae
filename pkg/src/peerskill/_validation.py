"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numbers

import numpy as np


def check_weights(weights) -> np.ndarray:
    """Validate an interaction matrix and return it as a read-only int array."""
    w = np.asarray(weights)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weights must be a square matrix, got shape {w.shape}")
    if w.shape[0] < 1:
        raise ValueError("weights must describe at least one participant")
    if w.dtype.kind == "f":
        if not np.all(np.isfinite(w)) or not np.array_equal(w, np.round(w)):
            raise ValueError("weights must be integer comment counts")
    elif w.dtype.kind not in "iub":
        raise ValueError(f"weights must be numeric, got dtype {w.dtype}")
    w = w.astype(np.int64)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if np.any(np.diag(w) != 0):
        raise ValueError("weights must have a zero diagonal (no self-interaction)")
    if not np.array_equal(w, w.T):
        raise ValueError("weights must be symmetric")
    w.setflags(write=False)
    return w


def check_signal(values, n: int | None = None) -> np.ndarray:
    """Return ``values`` as a finite 1-D float array, optionally of length ``n``."""
    r = np.asarray(values, dtype=float)
    if r.ndim != 1:
        raise ValueError(f"signal must be one-dimensional, got shape {r.shape}")
    if n is not None and r.shape[0] != n:
        raise ValueError(f"signal has length {r.shape[0]}, expected {n}")
    if not np.all(np.isfinite(r)):
        raise ValueError("signal values must be finite")
    return r


def check_prompts(prompts) -> np.ndarray:
    """Prompts are positive integers; accepts shape (m,) or (m, 1)."""
    p = np.asarray(prompts)
    if p.ndim == 2 and p.shape[1] == 1:
        p = p[:, 0]
    if p.ndim != 1:
        raise ValueError(f"prompts must be one-dimensional, got shape {p.shape}")
    pf = p.astype(float)
    if not np.all(np.isfinite(pf)) or not np.array_equal(pf, np.round(pf)):
        raise ValueError("prompts must be integers")
    if np.any(pf < 1):
        raise ValueError("prompts must be >= 1")
    return pf.astype(np.int64)


def check_nonnegative(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a nonnegative finite real, got {value!r}")
    return float(value)


def check_random_state(seed) -> np.random.Generator:
    """Turn ``seed`` into a PCG64-backed ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.Generator(np.random.PCG64(seed))
    raise ValueError(f"cannot build a random generator from {seed!r}")
