"""Hot numeric kernels: dense dual simplex and Monte Carlo violation scans.

Each kernel exists twice. The ``*_loops`` variants are scalar loops written
for numba; the ``*_numpy`` variants are vectorized and serve as the fallback
when numba is unavailable or disabled through ``RCCLP_NO_NUMBA``. The public
names at the bottom are bound to whichever path is active.
"""
import numpy as np

from ._jit import HAVE_NUMBA, njit

OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2


# --------------------------------------------------------------------------
# dual simplex
#
# Primal:  min c.theta  s.t.  G theta <= h          (theta free)
# Dual:    min h.y      s.t.  G^T y = -c,  y >= 0
#
# A dual basis is a set of d rows of G. Its complementary primal point solves
# G_B theta = h_B, and the dual is optimal exactly when that point satisfies
# every row, so the terminal basis is the active set of the primal optimum.
# Entering and leaving choices follow Bland's rule over row order.
# --------------------------------------------------------------------------


def _dual_simplex_loops(G, h, c, basis0, tol, max_iter):
    n_rows, d = G.shape
    basis = basis0.copy()
    in_basis = np.zeros(n_rows, dtype=np.bool_)
    for i in range(d):
        in_basis[basis[i]] = True
    y = np.zeros(d)
    theta = np.zeros(d)
    B = np.empty((d, d))
    status = ITERATION_LIMIT
    iters = 0
    for it in range(max_iter):
        iters = it
        for i in range(d):
            for k in range(d):
                B[k, i] = G[basis[i], k]
        Binv = np.linalg.inv(B)
        for i in range(d):
            acc = 0.0
            for k in range(d):
                acc -= Binv[i, k] * c[k]
            y[i] = acc
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc += Binv[i, k] * h[basis[i]]
            theta[k] = acc

        enter = -1
        for j in range(n_rows):
            if in_basis[j]:
                continue
            r = h[j]
            for k in range(d):
                r -= G[j, k] * theta[k]
            if r < -tol * max(1.0, abs(h[j])):
                enter = j
                break
        if enter < 0:
            status = OPTIMAL
            break

        w = np.zeros(d)
        for i in range(d):
            acc = 0.0
            for k in range(d):
                acc += Binv[i, k] * G[enter, k]
            w[i] = acc
        best = np.inf
        for i in range(d):
            if w[i] > tol:
                ratio = max(y[i], 0.0) / w[i]
                if ratio < best:
                    best = ratio
        if best == np.inf:
            status = INFEASIBLE
            break
        cutoff = best + 1e-12 * max(1.0, best)
        leave = -1
        for i in range(d):
            if w[i] > tol and max(y[i], 0.0) / w[i] <= cutoff:
                if leave < 0 or basis[i] < basis[leave]:
                    leave = i
        in_basis[basis[leave]] = False
        in_basis[enter] = True
        basis[leave] = enter
    return status, basis, y, theta, iters


def _dual_simplex_numpy(G, h, c, basis0, tol, max_iter):
    n_rows, d = G.shape
    basis = basis0.copy()
    in_basis = np.zeros(n_rows, dtype=bool)
    in_basis[basis] = True
    thresh = -tol * np.maximum(1.0, np.abs(h))
    y = np.zeros(d)
    theta = np.zeros(d)
    status = ITERATION_LIMIT
    iters = 0
    for it in range(max_iter):
        iters = it
        Binv = np.linalg.inv(G[basis].T)
        y = -(Binv @ c)
        theta = Binv.T @ h[basis]
        reduced = h - G @ theta
        candidates = np.flatnonzero((reduced < thresh) & ~in_basis)
        if candidates.size == 0:
            status = OPTIMAL
            break
        enter = candidates[0]
        w = Binv @ G[enter]
        pos = w > tol
        if not pos.any():
            status = INFEASIBLE
            break
        ratios = np.full(d, np.inf)
        ratios[pos] = np.maximum(y[pos], 0.0) / w[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
        leave = ties[np.argmin(basis[ties])]
        in_basis[basis[leave]] = False
        in_basis[enter] = True
        basis[leave] = enter
    return status, basis, y, theta, iters


# --------------------------------------------------------------------------
# violation scans over sampled perturbations Q (K x m x d) of a nominal A0
# row r of sample k is violated when
#   (A0[r] + Q[k, r]).theta > b[r] + tol * max(1, |b[r]|, |a| |theta|)
# --------------------------------------------------------------------------


def _first_violation_loops(A0, b, theta, Q, tol):
    K, m, d = Q.shape
    tnorm = 0.0
    for j in range(d):
        tnorm += theta[j] * theta[j]
    tnorm = np.sqrt(tnorm)
    for k in range(K):
        for r in range(m):
            lhs = 0.0
            nrm = 0.0
            for j in range(d):
                a = A0[r, j] + Q[k, r, j]
                lhs += a * theta[j]
                nrm += a * a
            scale = max(1.0, abs(b[r]), np.sqrt(nrm) * tnorm)
            if lhs > b[r] + tol * scale:
                return k
    return -1


def _violation_mask_loops(A0, b, theta, Q, tol):
    K, m, d = Q.shape
    out = np.zeros(K, dtype=np.bool_)
    tnorm = 0.0
    for j in range(d):
        tnorm += theta[j] * theta[j]
    tnorm = np.sqrt(tnorm)
    for k in range(K):
        for r in range(m):
            lhs = 0.0
            nrm = 0.0
            for j in range(d):
                a = A0[r, j] + Q[k, r, j]
                lhs += a * theta[j]
                nrm += a * a
            scale = max(1.0, abs(b[r]), np.sqrt(nrm) * tnorm)
            if lhs > b[r] + tol * scale:
                out[k] = True
                break
    return out


def _violation_mask_numpy(A0, b, theta, Q, tol):
    rows = A0[None, :, :] + Q
    lhs = rows @ theta
    scale = np.maximum(np.maximum(1.0, np.abs(b)), np.linalg.norm(rows, axis=2) * np.linalg.norm(theta))
    return (lhs > b + tol * scale).any(axis=1)


def _first_violation_numpy(A0, b, theta, Q, tol):
    mask = _violation_mask_numpy(A0, b, theta, Q, tol)
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else -1


if HAVE_NUMBA:
    dual_simplex_jit = njit(cache=True)(_dual_simplex_loops)
    first_violation_jit = njit(cache=True)(_first_violation_loops)
    violation_mask_jit = njit(cache=True)(_violation_mask_loops)
    dual_simplex = dual_simplex_jit
    first_violation = first_violation_jit
    violation_mask = violation_mask_jit
else:  # pragma: no cover - exercised with RCCLP_NO_NUMBA=1
    dual_simplex_jit = first_violation_jit = violation_mask_jit = None
    dual_simplex = _dual_simplex_numpy
    first_violation = _first_violation_numpy
    violation_mask = _violation_mask_numpy

dual_simplex_numpy = _dual_simplex_numpy
first_violation_numpy = _first_violation_numpy
violation_mask_numpy = _violation_mask_numpy
