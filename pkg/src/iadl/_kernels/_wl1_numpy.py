"""Pure-NumPy weighted-l1 ball projection kernel.

Reference implementation of the row-wise projection used by the solver; the
compiled module in ``_wl1.pyx`` mirrors this algorithm. Inputs are assumed
validated: float64 arrays, strictly positive weights, non-negative radii.
"""

import numpy as np


def _bisect_gamma(mags, w, phi, iters=128):
    # Monotone decreasing g(gamma) = sum w * max(mags - gamma * w, 0).
    lo = 0.0
    hi = float(np.max(mags / w))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(w * np.maximum(mags - mid * w, 0.0)) > phi:
            lo = mid
        else:
            hi = mid
    return hi


def _project_block(v, w, phi):
    """Project rows known to violate their constraint (breakpoint method)."""
    n_rows = v.shape[0]
    mags = np.abs(v)
    ratios = mags / w
    order = np.argsort(ratios, axis=1, kind="stable")
    r_sorted = np.take_along_axis(ratios, order, axis=1)
    wm = np.take_along_axis(w * mags, order, axis=1)
    w2 = np.take_along_axis(w * w, order, axis=1)

    # Suffix sums over the sorted breakpoints; summing from the small end
    # keeps each suffix accurate relative to its own magnitude.
    suf_a = np.cumsum(wm[:, ::-1], axis=1)[:, ::-1]
    suf_b = np.cumsum(w2[:, ::-1], axis=1)[:, ::-1]
    zeros = np.zeros((n_rows, 1))
    a_after = np.concatenate([suf_a[:, 1:], zeros], axis=1)
    b_after = np.concatenate([suf_b[:, 1:], zeros], axis=1)

    # g evaluated at each breakpoint; first index where it drops to phi or
    # below brackets the active interval (the last breakpoint gives g = 0,
    # so a hit always exists).
    g = a_after - r_sorted * b_after
    k = np.argmax(g <= phi[:, None], axis=1)
    rows = np.arange(n_rows)
    gamma = (suf_a[rows, k] - phi) / suf_b[rows, k]

    part = mags - gamma[:, None] * w
    return np.where(part > 0.0, np.sign(v) * part, 0.0)


def project_rows(v, w, phi, degenerate_ratio=1e12):
    """Project each row of ``v`` onto its weighted-l1 ball of radius phi[i].

    Rows already inside their ball are returned unchanged. Rows with nearly
    degenerate weights (max/min above ``degenerate_ratio``) use bisection on
    the threshold instead of the breakpoint scan.
    """
    out = np.array(v, dtype=np.float64, copy=True)
    mags = np.abs(v)
    wl1 = np.einsum("ij,ij->i", w, mags)
    todo = np.flatnonzero(wl1 > phi)
    if todo.size == 0:
        return out

    zero_radius = todo[phi[todo] == 0.0]
    out[zero_radius] = 0.0
    todo = todo[phi[todo] > 0.0]
    if todo.size == 0:
        return out

    cond = np.max(w[todo], axis=1) / np.min(w[todo], axis=1)
    degenerate = cond > degenerate_ratio

    easy = todo[~degenerate]
    if easy.size:
        out[easy] = _project_block(v[easy], w[easy], phi[easy])

    for i in todo[degenerate]:
        gamma = _bisect_gamma(mags[i], w[i], phi[i])
        part = mags[i] - gamma * w[i]
        out[i] = np.where(part > 0.0, np.sign(v[i]) * part, 0.0)
    return out
