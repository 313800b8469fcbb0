"""Central finite-difference gradient verification.

Run at float64: the default step 1e-5 leaves ~1e-10 truncation error, far
below the 1e-4 acceptance tolerance, while float32 round-off would swamp it.
"""

from __future__ import annotations

import numpy as np


def numeric_gradient(loss_fn, array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar-valued ``loss_fn`` w.r.t. ``array``,
    perturbing it in place element by element."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = loss_fn()
        flat[i] = orig - h
        lo = loss_fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Elementwise |a - n| / max(1, |a|, |n|); the unit floor keeps the
    measure absolute where both gradients vanish."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def sampled_gradient_error(loss_fn, arrays: dict[str, np.ndarray],
                           analytic: dict[str, np.ndarray],
                           h: float = 1e-5, max_per_tensor: int | None = None,
                           rng: np.random.Generator | None = None) -> float:
    """Worst relative error between analytic gradients and central
    differences, optionally checking a random element subset per tensor
    (every tensor is always visited)."""
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, arr in arrays.items():
        flat = arr.reshape(-1)
        n = flat.size
        if max_per_tensor is not None and n > max_per_tensor:
            idxs = rng.choice(n, size=max_per_tensor, replace=False)
        else:
            idxs = np.arange(n)
        aflat = analytic[name].reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            hi = loss_fn()
            flat[i] = orig - h
            lo = loss_fn()
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * h)
            denom = max(1.0, abs(aflat[i]), abs(numeric))
            worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst
