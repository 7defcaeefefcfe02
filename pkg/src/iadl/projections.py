"""Weighted-l1 machinery and the projection operators used by the solver.

All functions are pure; row-wise matrix projections share no mutable state
and are safe to run in parallel.
"""

from __future__ import annotations

import numpy as np

from ._kernels import project_rows as _project_rows_kernel


def compute_weights(x, epsilon: float) -> np.ndarray:
    """Reweighting vector ``w_i = 1 / (|x_i| + epsilon)``.

    The stabilizer ``epsilon`` keeps the weights finite on zero entries;
    element-wise, so ``x`` may have any shape.
    """
    if epsilon <= 0:
        raise ValueError("weight stabilizer must be positive")
    return 1.0 / (np.abs(np.asarray(x, dtype=np.float64)) + epsilon)


def weighted_l1_norm(x, w) -> float:
    """``sum_i w_i |x_i|`` for vectors of equal length."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.shape != w.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {w.shape}")
    return float(np.sum(w * np.abs(x)))


def weighted_l1_matrix_norm(s, w) -> float:
    """Matrix generalization ``sum_ij w_ij |s_ij|`` (trace of |S| W^T)."""
    s = np.asarray(s, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if s.shape != w.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {w.shape}")
    return float(np.sum(w * np.abs(s)))


def _check_weights(w):
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be strictly positive and finite")


def project_weighted_l1_rows(v, w, phi) -> np.ndarray:
    """Project each row of ``v`` onto the weighted-l1 ball of radius phi[i].

    Rows already satisfying their constraint pass through unchanged; the
    others are soft-thresholded at the smallest level that makes the
    constraint active. Signs are preserved and shrunk entries become exact
    zeros.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    phi = np.ascontiguousarray(np.atleast_1d(phi), dtype=np.float64)
    if v.ndim != 2 or v.shape != w.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {w.shape}")
    if phi.shape != (v.shape[0],):
        raise ValueError(f"need one radius per row, got {phi.shape}")
    if np.any(phi < 0):
        raise ValueError("ball radius must be non-negative")
    _check_weights(w)
    return _project_rows_kernel(v, w, phi)


def project_weighted_l1_ball(v, w, phi: float) -> np.ndarray:
    """Euclidean projection of a vector onto ``{x : sum w_i |x_i| <= phi}``."""
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if v.ndim != 1 or v.shape != w.shape:
        raise ValueError(f"expected matching vectors, got {v.shape} vs {w.shape}")
    return project_weighted_l1_rows(v[None, :], w[None, :], [phi])[0]


def project_weighted_l1_matrix_ball(s, w, phi_total: float) -> np.ndarray:
    """Project a full matrix onto the weighted-l1 ball of radius phi_total.

    Equivalent to vectorizing, projecting and reshaping back.
    """
    s = np.asarray(s, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if s.shape != w.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {w.shape}")
    flat = project_weighted_l1_ball(s.ravel(), w.ravel(), phi_total)
    return flat.reshape(s.shape)


def project_similarity_ball(b, delta, c_delta: float) -> np.ndarray:
    """Project ``b`` onto ``{x : ||x - delta||^2 <= c_delta}``."""
    b = np.asarray(b, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if b.shape != delta.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {delta.shape}")
    if c_delta < 0:
        raise ValueError("similarity radius must be non-negative")
    diff = b - delta
    dist_sq = float(diff @ diff)
    if dist_sq <= c_delta:
        return b.copy()
    if dist_sq == 0.0:
        return delta.copy()
    return delta + np.sqrt(c_delta / dist_sq) * diff


def project_l2_ball(b, c_d: float) -> np.ndarray:
    """Project ``b`` onto ``{x : ||x||^2 <= c_d}``."""
    if c_d <= 0:
        raise ValueError("norm bound must be positive")
    return project_similarity_ball(b, np.zeros_like(np.asarray(b, dtype=np.float64)), c_d)
