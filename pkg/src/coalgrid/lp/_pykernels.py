"""numpy implementations of the simplex inner kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when the
extension is not built.
"""
import numpy as np

AT_LOWER, AT_UPPER, BASIC, BARRED = 0, 1, 2, 3


def pivot(T, r, q):
    prow = T[r]
    prow /= prow[q]
    col = T[:, q].copy()
    col[r] = 0.0
    rows = np.flatnonzero(col)
    if rows.size:
        nz = np.flatnonzero(prow)
        T[np.ix_(rows, nz)] -= np.outer(col[rows], prow[nz])
        T[rows, q] = 0.0
    prow[q] = 1.0


def select_entering(d, state, tol, bland):
    cand = ((state == AT_LOWER) & (d < -tol)) | ((state == AT_UPPER) & (d > tol))
    idx = np.flatnonzero(cand)
    if idx.size == 0:
        return -1, 0
    if bland:
        q = int(idx[0])
    else:
        q = int(idx[np.argmax(np.abs(d[idx]))])
    return q, (1 if d[q] < 0 else -1)


def ratio_test(T, q, beta, ub_basic, basis, direction, ptol, harris_tol, bland):
    m = beta.shape[0]
    alpha = T[:m, q] * direction
    dec = alpha > ptol
    inc = (alpha < -ptol) & np.isfinite(ub_basic)
    ratios = np.full(m, np.inf)
    ratios[dec] = np.maximum(beta[dec], 0.0) / alpha[dec]
    ratios[inc] = np.maximum(ub_basic[inc] - beta[inc], 0.0) / -alpha[inc]
    cand = dec | inc
    if not cand.any():
        return -1, np.inf
    if bland:
        tmin = ratios.min()
        ties = np.flatnonzero(ratios <= tmin + 1e-12)
        r = int(ties[np.argmin(basis[ties])])
        return r, float(ratios[r])
    relaxed = np.full(m, np.inf)
    relaxed[dec] = (beta[dec] + harris_tol) / alpha[dec]
    relaxed[inc] = (ub_basic[inc] - beta[inc] + harris_tol) / -alpha[inc]
    bound = relaxed.min()
    ok = np.flatnonzero(ratios <= bound)
    r = int(ok[np.argmax(np.abs(alpha[ok]))])
    return r, float(ratios[r])
