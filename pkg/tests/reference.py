"""Independent oracles the production code is checked against.

Nothing here may import from ergopump.matrix_game's solver internals: the
2x2 closed form is hand-derived, the general LP goes through scipy, and the
support enumeration solves equalization systems directly.
"""

import itertools

import numpy as np
from scipy.optimize import linprog


def value_2x2(matrix):
    """Closed-form value of a 2x2 game: saddle point or equalization mix."""
    (a, b), (c, d) = np.asarray(matrix, dtype=float)
    row_mins = [min(a, b), min(c, d)]
    col_maxs = [max(a, c), max(b, d)]
    maximin = max(row_mins)
    minimax = min(col_maxs)
    if maximin == minimax:
        return maximin
    denom = a - b - c + d
    return (a * d - b * c) / denom


def strategies_2x2(matrix):
    """Optimal strategies of a 2x2 game without a pure saddle point."""
    (a, b), (c, d) = np.asarray(matrix, dtype=float)
    denom = a - b - c + d
    p = (d - c) / denom
    q = (d - b) / denom
    return np.array([p, 1 - p]), np.array([q, 1 - q])


def value_lp(matrix):
    """Game value via scipy's LP solver (independent of the package simplex).

    max v s.t. A^T alpha >= v, sum alpha = 1, alpha >= 0, written as a
    minimization over (alpha, v).
    """
    A = np.asarray(matrix, dtype=float)
    m, n = A.shape
    cost = np.zeros(m + 1)
    cost[m] = -1.0
    A_ub = np.hstack([-A.T, np.ones((n, 1))])
    b_ub = np.zeros(n)
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    assert res.success
    return -res.fun


def value_support_enum(matrix, tol=1e-10):
    """Value by enumerating support patterns and solving equalization systems."""
    A = np.asarray(matrix, dtype=float)
    m, n = A.shape
    for rows in _supports(m):
        for cols in _supports(n):
            sol = _try_support(A, rows, cols, tol)
            if sol is not None:
                return sol
    raise AssertionError("no equilibrium support found")


def _supports(size):
    for r in range(1, size + 1):
        yield from itertools.combinations(range(size), r)


def _try_support(A, rows, cols, tol):
    m, n = A.shape
    k, l = len(rows), len(cols)
    # unknowns: alpha on rows, beta on cols, value v
    # equalization: alpha^T A[:, c] = v for c in cols; A[r, :] beta = v for r in rows
    sys_a = np.zeros((l + 1, k + 1))
    rhs_a = np.zeros(l + 1)
    for i, c in enumerate(cols):
        sys_a[i, :k] = A[np.array(rows), c]
        sys_a[i, k] = -1.0
    sys_a[l, :k] = 1.0
    rhs_a[l] = 1.0
    sys_b = np.zeros((k + 1, l + 1))
    rhs_b = np.zeros(k + 1)
    for i, r in enumerate(rows):
        sys_b[i, :l] = A[r, np.array(cols)]
        sys_b[i, l] = -1.0
    sys_b[k, :l] = 1.0
    rhs_b[k] = 1.0
    try:
        alpha_v, *_ = np.linalg.lstsq(sys_a, rhs_a, rcond=None)
        beta_v, *_ = np.linalg.lstsq(sys_b, rhs_b, rcond=None)
    except np.linalg.LinAlgError:
        return None
    if (np.abs(sys_a @ alpha_v - rhs_a).max() > tol
            or np.abs(sys_b @ beta_v - rhs_b).max() > tol):
        return None
    alpha = np.zeros(m)
    alpha[np.array(rows)] = alpha_v[:k]
    beta = np.zeros(n)
    beta[np.array(cols)] = beta_v[:l]
    va, vb = alpha_v[k], beta_v[l]
    if abs(va - vb) > 1e-8 or alpha.min() < -tol or beta.min() < -tol:
        return None
    # optimality: no profitable pure deviation
    if (A @ beta).max() > va + 1e-8 or (alpha @ A).min() < va - 1e-8:
        return None
    return va
