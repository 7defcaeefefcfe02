"""Decomposition scoring: matrix Pearson correlation, full-source and
time-course measures, greedy assisted-then-blind matching, and the atlas
sparsity arithmetic.

Correlations use the standard vectorized sample Pearson (count-1 divisor
with sample standard deviations), which bounds rho by 1; rankings built on
rho^2 are unaffected by the normalization constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import CoefficientMatrix, Dictionary, SourceSet
from .synthgen import BRAIN_KINDS

FULL_SOURCE = "full_source"
TIME_COURSE = "time_course"


def matrix_pearson(a, b) -> float:
    """Sample Pearson correlation of two equal-shape matrices, vectorized."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("matrices must share a shape")
    a = a - a.mean()
    b = b - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        raise ValueError("correlation undefined for a constant matrix")
    return float(np.clip(a @ b / denom, -1.0, 1.0))


def full_source(d, s) -> np.ndarray:
    """Rank-1 expression of one source across voxels and time."""
    return np.outer(np.asarray(d, dtype=np.float64), np.asarray(s, dtype=np.float64))


def _outer_pearson_sq(d1, s1, d2, s2) -> float:
    """rho^2 between two outer products, without materializing them.

    All moments of d s^T reduce to per-factor moments, so each pair costs
    O(T + N) instead of O(T N). Returns 0 for constant sources.
    """
    t, n = d1.size, s1.size
    count = t * n
    sum1 = d1.sum() * s1.sum()
    sum2 = d2.sum() * s2.sum()
    sq1 = (d1 @ d1) * (s1 @ s1)
    sq2 = (d2 @ d2) * (s2 @ s2)
    cross = (d1 @ d2) * (s1 @ s2)
    var1 = sq1 - sum1 * sum1 / count
    var2 = sq2 - sum2 * sum2 / count
    if var1 <= 0 or var2 <= 0:
        return 0.0
    cov = cross - sum1 * sum2 / count
    return float(min(cov * cov / (var1 * var2), 1.0))


def _course_pearson_sq(d1, d2) -> float:
    c1 = d1 - d1.mean()
    c2 = d2 - d2.mean()
    denom = (c1 @ c1) * (c2 @ c2)
    if denom <= 0:
        return 0.0
    num = c1 @ c2
    return float(min(num * num / denom, 1.0))


@dataclass(frozen=True)
class MatchReport:
    """Greedy matching outcome: per-true-source scores and set summaries."""

    mapping: dict
    r_full: np.ndarray
    r_time: np.ndarray
    summaries: dict


def _correlation_table(truth: SourceSet, dv, sv, mode: str) -> np.ndarray:
    k_true = truth.n_sources
    k_est = dv.shape[1]
    c = np.zeros((k_true, k_est))
    for i in range(k_true):
        td = truth.time_courses[:, i]
        ts = truth.spatial_maps[i]
        for j in range(k_est):
            if mode == FULL_SOURCE:
                c[i, j] = _outer_pearson_sq(td, ts, dv[:, j], sv[j])
            else:
                c[i, j] = _course_pearson_sq(td, dv[:, j])
    return c


def match_and_score(
    truth: SourceSet,
    est_dictionary: Dictionary,
    est_coefficients: CoefficientMatrix,
    assisted_true_indices,
    mode: str = FULL_SOURCE,
) -> MatchReport:
    """Assign estimated sources to true sources and score the assignment.

    Assisted estimates (the first M atoms) are matched directly to their
    known true sources; the rest greedily take the largest remaining
    rho^2 entry, with ties resolved at the lowest row then column index.
    Both the full-source and time-course scores are reported along the
    selected assignment.
    """
    if mode not in (FULL_SOURCE, TIME_COURSE):
        raise ValueError(f"unknown scoring mode {mode!r}")
    p = [int(i) for i in assisted_true_indices]
    m = est_dictionary.assisted_count
    k_true = truth.n_sources
    k_est = est_dictionary.n_atoms
    if m > k_est:
        raise ValueError("assisted count exceeds estimated source count")
    if len(p) != m:
        raise ValueError("need one true index per assisted source")
    if len(set(p)) != len(p) or any(not 0 <= i < k_true for i in p):
        raise ValueError("assisted true indices must be distinct and in range")

    dv = est_dictionary.values
    sv = est_coefficients.values
    c = _correlation_table(truth, dv, sv, mode)

    r = np.zeros(k_true)
    mapping = {}
    work = c.copy()
    for j, true_idx in enumerate(p):
        r[true_idx] = work[true_idx, j]
        mapping[true_idx] = j
        work[true_idx, :] = 0.0
        work[:, j] = 0.0

    open_rows = np.ones(k_true, dtype=bool)
    open_cols = np.ones(k_est, dtype=bool)
    open_rows[p] = False
    open_cols[:m] = False
    for _ in range(min(k_true, k_est) - m):
        masked = np.where(open_rows[:, None] & open_cols[None, :], work, -1.0)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        r[i] = max(work[i, j], 0.0)
        mapping[i] = int(j)
        open_rows[i] = False
        open_cols[j] = False

    r_full = np.zeros(k_true)
    r_time = np.zeros(k_true)
    for i, j in mapping.items():
        r_full[i] = _outer_pearson_sq(
            truth.time_courses[:, i], truth.spatial_maps[i], dv[:, j], sv[j]
        )
        r_time[i] = _course_pearson_sq(truth.time_courses[:, i], dv[:, j])

    brain = [i for i, kind in enumerate(truth.kinds) if kind in BRAIN_KINDS]
    sets = {"assisted": p, "brain": brain or list(range(k_true)), "all": list(range(k_true))}
    summaries = {}
    for name, idx in sets.items():
        if idx:
            summaries[f"{name}_full"] = float(np.mean(r_full[idx]))
            summaries[f"{name}_time"] = float(np.mean(r_time[idx]))
    return MatchReport(mapping=mapping, r_full=r_full, r_time=r_time, summaries=summaries)


def atlas_fbn_sparsity(region_thetas) -> float:
    """Sparsity percentage of a network spread over non-overlapping
    regions with known per-region sparsities."""
    thetas = [float(t) for t in region_thetas]
    if not thetas:
        raise ValueError("need at least one region")
    for theta in thetas:
        if not 0.0 <= theta <= 100.0:
            raise ValueError(f"region sparsity {theta} outside [0, 100]")
    result = 100.0 * (1 - len(thetas)) + sum(thetas)
    if result < 0.0:
        raise ValueError(
            "regions cover more than the whole volume; the non-overlap "
            "assumption is violated"
        )
    return result
