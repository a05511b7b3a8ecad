"""Hot numeric kernels: numba-compiled loops with pure-numpy fallbacks.

The numba path is used by default.  Set the environment variable
``LINOT_NO_NUMBA=1`` (or any value other than ``0``/``false``/empty) before
import to select the vectorized numpy implementations instead; the same
switch is what the kernel benchmark flips.  Both paths implement identical
arithmetic and are cross-checked in the test suite.
"""
from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    flag = os.environ.get("LINOT_NO_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false")


# ---------------------------------------------------------------------------
# Pure-numpy implementations
# ---------------------------------------------------------------------------

def sinkhorn_potentials_numpy(cost, loga, logb, reg, max_iters, tol):
    """Log-domain Sinkhorn scaling iterations.

    Returns dual potentials (f, g), the iteration count, and the final
    column-marginal sup error of the (unrounded) plan.
    """
    n, m = cost.shape
    zc = cost / reg
    f = np.zeros(n)
    g = np.zeros(m)
    b = np.exp(logb)
    err = np.inf
    it = 0
    while it < max_iters:
        zg = f[:, None] / reg - zc  # (n, m)
        mx = zg.max(axis=0)
        g = reg * (logb - mx - np.log(np.exp(zg - mx[None, :]).sum(axis=0)))
        zf = g[None, :] / reg - zc
        mx = zf.max(axis=1)
        lse = np.log(np.exp(zf - mx[:, None]).sum(axis=1))
        f = reg * (loga - mx - lse)
        it += 1
        # after the f-update rows are exact; measure the column residual
        plan = np.exp((f[:, None] + g[None, :]) / reg - zc)
        err = float(np.abs(plan.sum(axis=0) - b).max())
        if err < tol:
            break
    return f, g, it, err


def monotonicity_scan_numpy(x, y, tol):
    """Pairwise swap test over plan support atoms.

    ``x[k] -> y[k]`` are matched pairs (with positive mass).  A pair of
    atoms (k, l) violates monotonicity when swapping their targets would
    lower the total squared cost by more than ``tol``.  Returns the count
    of violating unordered pairs and the worst improvement found.
    """
    m = len(x)
    if m < 2:
        return 0, 0.0
    count = 0
    worst = 0.0
    block = max(1, int(2**22 // max(m, 1)))
    for start in range(0, m, block):
        stop = min(start + block, m)
        dx = x[start:stop, None, :] - x[None, :, :]
        dy = y[start:stop, None, :] - y[None, :, :]
        gain = np.einsum("klj,klj->kl", dx, dy)
        # only count unordered pairs once: l > global index k
        kidx = np.arange(start, stop)[:, None]
        lmask = np.arange(m)[None, :] > kidx
        bad = (gain < -tol / 2.0) & lmask
        count += int(bad.sum())
        if bad.any():
            worst = max(worst, float((-2.0 * gain[bad]).max()))
    return count, worst


def min_alignment_quotient_numpy(points, values):
    """Min over point pairs of (T(x_i)-T(x_j))·(x_i-x_j) / ||x_i-x_j||^2."""
    n = len(points)
    best = np.inf
    block = max(1, int(2**22 // max(n, 1)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        dx = points[start:stop, None, :] - points[None, :, :]
        dv = values[start:stop, None, :] - values[None, :, :]
        num = np.einsum("klj,klj->kl", dv, dx)
        den = np.einsum("klj,klj->kl", dx, dx)
        mask = den > 0
        if mask.any():
            best = min(best, float((num[mask] / den[mask]).min()))
    return best


# ---------------------------------------------------------------------------
# Numba implementations (same arithmetic, explicit loops)
# ---------------------------------------------------------------------------

def _build_numba():
    import numba

    @numba.njit(cache=True)
    def sinkhorn_potentials_nb(cost, loga, logb, reg, max_iters, tol):
        n, m = cost.shape
        zc = cost / reg
        f = np.zeros(n)
        g = np.zeros(m)
        b = np.exp(logb)
        err = np.inf
        it = 0
        row = np.empty(m)
        while it < max_iters:
            for j in range(m):
                mx = -np.inf
                for i in range(n):
                    z = f[i] / reg - zc[i, j]
                    if z > mx:
                        mx = z
                s = 0.0
                for i in range(n):
                    s += np.exp(f[i] / reg - zc[i, j] - mx)
                g[j] = reg * (logb[j] - mx - np.log(s))
            colsum = np.zeros(m)
            for i in range(n):
                mx = -np.inf
                for j in range(m):
                    z = g[j] / reg - zc[i, j]
                    if z > mx:
                        mx = z
                s = 0.0
                for j in range(m):
                    row[j] = np.exp(g[j] / reg - zc[i, j] - mx)
                    s += row[j]
                f[i] = reg * (loga[i] - mx - np.log(s))
                ai = np.exp(loga[i])
                for j in range(m):
                    colsum[j] += ai * row[j] / s
            it += 1
            err = 0.0
            for j in range(m):
                e = abs(colsum[j] - b[j])
                if e > err:
                    err = e
            if err < tol:
                break
        return f, g, it, err

    @numba.njit(cache=True)
    def monotonicity_scan_nb(x, y, tol):
        m, d = x.shape
        count = 0
        worst = 0.0
        for k in range(m):
            for l in range(k + 1, m):
                gain = 0.0
                for j in range(d):
                    gain += (x[k, j] - x[l, j]) * (y[k, j] - y[l, j])
                if gain < -tol / 2.0:
                    count += 1
                    imp = -2.0 * gain
                    if imp > worst:
                        worst = imp
        return count, worst

    @numba.njit(cache=True)
    def min_alignment_quotient_nb(points, values):
        n, d = points.shape
        best = np.inf
        for i in range(n):
            for j in range(i + 1, n):
                num = 0.0
                den = 0.0
                for k in range(d):
                    dx = points[i, k] - points[j, k]
                    num += (values[i, k] - values[j, k]) * dx
                    den += dx * dx
                if den > 0.0:
                    q = num / den
                    if q < best:
                        best = q
        return best

    return sinkhorn_potentials_nb, monotonicity_scan_nb, min_alignment_quotient_nb


USING_NUMBA = False
sinkhorn_potentials = sinkhorn_potentials_numpy
monotonicity_scan = monotonicity_scan_numpy
min_alignment_quotient = min_alignment_quotient_numpy

if not _numba_disabled():
    try:
        (
            sinkhorn_potentials,
            monotonicity_scan,
            min_alignment_quotient,
        ) = _build_numba()
        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


def using_numba() -> bool:
    return USING_NUMBA
