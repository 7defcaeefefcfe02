"""Four-step starting-point construction: ICA estimate, assisted-atom
alignment, full-matrix sparsity refinement, sparsity-ordered permutation.

The ICA stage is a self-contained symmetric fixed-point iteration (tanh
contrast) on PCA-whitened data, so the initializer carries no external
dependency; any decomposition of comparable quality can be supplied
through the (d0, s0) escape hatch instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .projections import (
    compute_weights,
    project_weighted_l1_matrix_ball,
    project_weighted_l1_rows,
    weighted_l1_matrix_norm,
)
from .solver import SolverConfig, _dictionary_step, _scale_constant
from .types import CoefficientMatrix, ConstraintSpec, DataMatrix, Dictionary, TaskTimeCourses


@dataclass(frozen=True)
class InitConfig:
    ica_max_iters: int = 400
    ica_tol: float = 1e-7
    merge_corr_threshold: float = 0.95
    refine_iters: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.merge_corr_threshold <= 1:
            raise ValueError("merge threshold must lie in (0, 1]")
        if self.ica_max_iters < 1 or self.refine_iters < 0:
            raise ValueError("iteration counts must be positive")
        if self.ica_tol <= 0:
            raise ValueError("ica_tol must be positive")


def _sym_decorrelate(w):
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.maximum(vals, 1e-12 * vals.max())
    return (vecs / np.sqrt(vals)) @ vecs.T @ w


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return float(a @ b / denom)


def merge_correlated(d, s, threshold):
    """Collapse component pairs whose time courses correlate beyond the
    threshold: sum the pair (sign-aligned), renormalize the merged atom."""
    d = np.array(d, dtype=float)
    s = np.array(s, dtype=float)
    while d.shape[1] > 1:
        k = d.shape[1]
        best = None
        for i in range(k):
            for j in range(i + 1, k):
                rho = _pearson(d[:, i], d[:, j])
                if abs(rho) > threshold and (best is None or abs(rho) > abs(best[2])):
                    best = (i, j, rho)
        if best is None:
            break
        i, j, rho = best
        sign = 1.0 if rho >= 0 else -1.0
        d[:, i] = d[:, i] + sign * d[:, j]
        nrm = np.linalg.norm(d[:, i])
        if nrm > 0:
            d[:, i] /= nrm
        s[i] = s[i] + sign * s[j]
        d = np.delete(d, j, axis=1)
        s = np.delete(s, j, axis=0)
    return d, s


def ica_decompose(x: DataMatrix, k: int, cfg: InitConfig = InitConfig()):
    """PCA-whitened symmetric fixed-point ICA over the voxel samples.

    Returns the mixing estimate as time courses and the component maps;
    components whose time courses correlate beyond the merge threshold are
    summed back together, so fewer than ``k`` components can come back.
    """
    xv = x.values
    t, n = xv.shape
    if not 1 <= k <= t:
        raise ValueError(f"component count must lie in [1, {t}]")
    mu = xv.mean(axis=1, keepdims=True)
    xc = xv - mu
    cov = (xc @ xc.T) / n
    evals, evecs = np.linalg.eigh(cov)
    evals = evals[::-1][:k]
    evecs = evecs[:, ::-1][:, :k]
    evals = np.maximum(evals, 1e-12 * max(evals[0], 1e-300))
    z = (evecs / np.sqrt(evals)).T @ xc

    rng = np.random.default_rng(cfg.rng_seed)
    w = _sym_decorrelate(rng.standard_normal((k, k)))
    converged = False
    for _ in range(cfg.ica_max_iters):
        wz = w @ z
        g = np.tanh(wz)
        w_new = (g @ z.T) / n - np.diag(np.mean(1.0 - g**2, axis=1)) @ w
        w_new = _sym_decorrelate(w_new)
        drift = float(np.max(1.0 - np.abs(np.diag(w_new @ w.T))))
        w = w_new
        if drift < cfg.ica_tol:
            converged = True
            break
    if not converged:
        warnings.warn("ICA did not reach tolerance; returning best iterate", stacklevel=2)

    s = w @ z
    d = (evecs * np.sqrt(evals)) @ w.T
    d, s = merge_correlated(d, s, cfg.merge_corr_threshold)
    return Dictionary(d), CoefficientMatrix(s)


def align_assisted(dbar: Dictionary, sbar: CoefficientMatrix, delta: TaskTimeCourses):
    """Move the atoms most correlated with the task courses to the front,
    overwrite them with the courses, and flip map signs for negative
    matches."""
    m = delta.n_courses
    k = dbar.n_atoms
    if m > k:
        raise ValueError(f"{m} task courses but only {k} atoms")
    dv = dbar.values
    matched = []
    signs = []
    remaining = list(range(k))
    for i in range(m):
        corrs = [_pearson(delta.values[:, i], dv[:, j]) for j in remaining]
        pick = int(np.argmax(np.abs(corrs)))
        matched.append(remaining.pop(pick))
        signs.append(1.0 if corrs[pick] >= 0 else -1.0)

    perm = matched + remaining
    d_new = dv[:, perm].copy()
    s_new = sbar.values[perm].copy()
    d_new[:, :m] = delta.values
    for i, sign in enumerate(signs):
        if sign < 0:
            s_new[i] = -s_new[i]
    return Dictionary(d_new, assisted_count=m), CoefficientMatrix(s_new)


def refine_full_sparsity(
    x: DataMatrix,
    dbar: Dictionary,
    sbar: CoefficientMatrix,
    delta: TaskTimeCourses,
    spec: ConstraintSpec,
    cfg: InitConfig = InitConfig(),
):
    """A few solver iterations with the row-wise projection replaced by one
    projection of the whole coefficient matrix onto the ball of radius
    sum(phi); sparsifies the dense ICA maps before row budgets apply."""
    solver_cfg = SolverConfig()
    phi_total = float(np.sum(spec.phi))
    xv = x.values
    dv = dbar.values.copy()
    sv = sbar.values.copy()
    for _ in range(cfg.refine_iters):
        gram = dv.T @ dv
        c_s = _scale_constant(gram, solver_cfg)
        a = (dv.T @ xv + (c_s * np.eye(dv.shape[1]) - gram) @ sv) / c_s
        w = compute_weights(sv, spec.epsilon)
        if weighted_l1_matrix_norm(a, w) > phi_total:
            a = project_weighted_l1_matrix_ball(a, w, phi_total)
        sv = a
        dv, _ = _dictionary_step(xv, sv, dv, delta.values, spec, solver_cfg)
    return Dictionary(dv, assisted_count=delta.n_courses), CoefficientMatrix(sv)


def order_by_sparsity(d: Dictionary, s: CoefficientMatrix, m: int):
    """Permute the free atoms so their map sparsity percentages are
    non-increasing; rows up to ``m`` stay in place, ties keep original
    order."""
    sv = s.values
    k = d.n_atoms
    free = np.arange(m, k)
    if free.size:
        counts = np.count_nonzero(sv[m:], axis=1)
        order = np.argsort(counts, kind="stable")  # fewer active = sparser first
        perm = np.concatenate([np.arange(m), m + order])
    else:
        perm = np.arange(k)
    return (
        Dictionary(d.values[:, perm], assisted_count=d.assisted_count),
        CoefficientMatrix(sv[perm]),
    )


def initialize(
    x: DataMatrix,
    k: int,
    delta: TaskTimeCourses,
    spec: ConstraintSpec,
    cfg: InitConfig = InitConfig(),
    d0: Dictionary | None = None,
    s0: CoefficientMatrix | None = None,
):
    """Full pipeline; supplying (d0, s0) skips the ICA and alignment steps.

    Components lost to merging are replaced with fresh unit-norm atoms
    carrying empty maps, so the output is always T x k / k x N.
    """
    if (d0 is None) != (s0 is None):
        raise ValueError("supply both d0 and s0 or neither")
    if d0 is not None:
        if d0.values.shape != (x.n_times, k) or s0.values.shape[0] != k:
            raise ValueError("supplied starting point has wrong shape")
        dbar, sbar = Dictionary(d0.values, assisted_count=delta.n_courses), s0
    else:
        dbar, sbar = ica_decompose(x, k, cfg)
        if dbar.n_atoms < k:
            rng = np.random.default_rng(cfg.rng_seed + 1)
            extra = k - dbar.n_atoms
            atoms = rng.standard_normal((x.n_times, extra))
            atoms /= np.linalg.norm(atoms, axis=0)
            dbar = Dictionary(np.hstack([dbar.values, atoms]))
            sbar = CoefficientMatrix(
                np.vstack([sbar.values, np.zeros((extra, x.n_voxels))])
            )
        dbar, sbar = align_assisted(dbar, sbar, delta)
    d_ref, s_ref = refine_full_sparsity(x, dbar, sbar, delta, spec, cfg)
    d_out, s_out = order_by_sparsity(d_ref, s_ref, delta.n_courses)
    # Hand the solver a start that satisfies the row budgets under its own
    # weights: the matrix-ball refinement does not enforce per-row budgets,
    # and one projection is not enough (partially shrunk survivors inflate
    # the reweighted norm). Each pass only shrinks entries, so the support
    # contracts and the loop reaches a fixed point quickly.
    sv = s_out.values.copy()
    for _ in range(1000):
        weights = compute_weights(sv, spec.epsilon)
        norms = np.einsum("ij,ij->i", weights, np.abs(sv))
        if np.all(norms <= spec.phi + 1e-10):
            break
        sv = project_weighted_l1_rows(sv, weights, spec.phi)
    else:
        warnings.warn("starting point did not reach row feasibility", stacklevel=2)
    return d_out, CoefficientMatrix(sv)
