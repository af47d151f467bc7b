"""Small dense linear algebra for the 2x2 and 6x6 matrices used by the model.

Everything here works on plain ``numpy`` arrays and is written for tiny
matrices: LU with partial pivoting for solves and inverses, a Pade
scaling-and-squaring matrix exponential, and stationary vectors of Markov
generators and stochastic matrices.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import Reducible, ShapeMismatch, SingularMatrix, ValidationError

PIVOT_TOL = 1e-12
RANK_TOL = 1e-10

# (6, 6) Pade approximant; with ||A||_1 <= 1/2 the truncation error is ~1e-17.
_PADE_ORDER = 6
_PADE_COEFFS = [
    math.factorial(2 * _PADE_ORDER - k) * math.factorial(_PADE_ORDER)
    / (math.factorial(2 * _PADE_ORDER) * math.factorial(k) * math.factorial(_PADE_ORDER - k))
    for k in range(_PADE_ORDER + 1)
]
_EXP_NORM_BOUND = 0.5


def as_matrix(m, square: bool = True) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def lu_factor(m) -> tuple[np.ndarray, np.ndarray]:
    """LU factorisation with partial (row) pivoting.

    Returns the packed factors (unit lower triangle below the diagonal, upper
    triangle on and above it) and the row permutation.

    Raises:
        SingularMatrix: if no pivot exceeds ``PIVOT_TOL`` times the largest
            entry of ``m``.
    """
    lu = as_matrix(m)
    n = lu.shape[0]
    perm = np.arange(n)
    scale = float(np.max(np.abs(lu))) if lu.size else 0.0
    tol = PIVOT_TOL * (scale if scale > 0.0 else 1.0)
    for j in range(n):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        if abs(lu[p, j]) <= tol:
            raise SingularMatrix(f"no usable pivot in column {j}")
        if p != j:
            lu[[j, p]] = lu[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        lu[j + 1:, j] /= lu[j, j]
        lu[j + 1:, j + 1:] -= np.outer(lu[j + 1:, j], lu[j, j + 1:])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b) -> np.ndarray:
    x = np.array(b, dtype=float)[perm]
    n = lu.shape[0]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def solve(m, b) -> np.ndarray:
    """Solve ``m @ x = b`` for a vector or matrix right-hand side."""
    lu, perm = lu_factor(m)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != lu.shape[0]:
        raise ShapeMismatch(f"right-hand side has {b.shape[0]} rows, expected {lu.shape[0]}")
    return lu_solve(lu, perm, b)


def inverse(m) -> np.ndarray:
    lu, perm = lu_factor(m)
    return lu_solve(lu, perm, np.eye(lu.shape[0]))


def mat_exp(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a (6, 6) Pade approximant."""
    a = as_matrix(m)
    n = a.shape[0]
    norm = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    squarings = 0
    if norm > _EXP_NORM_BOUND:
        squarings = int(math.ceil(math.log2(norm / _EXP_NORM_BOUND)))
    a = a / (2.0 ** squarings)

    power = np.eye(n)
    num = _PADE_COEFFS[0] * power
    den = _PADE_COEFFS[0] * power
    for k in range(1, _PADE_ORDER + 1):
        power = power @ a
        num = num + _PADE_COEFFS[k] * power
        den = den + (-1) ** k * _PADE_COEFFS[k] * power
    result = solve(den, num)
    for _ in range(squarings):
        result = result @ result
    return result


def numerical_rank(m, tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with complete pivoting.

    Pivots at or below ``tol`` times the largest entry count as zero.
    """
    a = np.array(m, dtype=float)
    rows, cols = a.shape
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return 0
    rank = 0
    for j in range(min(rows, cols)):
        sub = np.abs(a[j:, j:])
        i, k = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[i, k] <= tol * scale:
            break
        i += j
        k += j
        a[[j, i]] = a[[i, j]]
        a[:, [j, k]] = a[:, [k, j]]
        a[j + 1:, j:] -= np.outer(a[j + 1:, j] / a[j, j], a[j, j:])
        rank += 1
    return rank


def stationary_vector(q, kind: str = "generator") -> np.ndarray:
    """Stationary probability vector of a generator or a stochastic matrix.

    Solves ``v @ q = 0`` (generator) or ``v @ q = v`` (stochastic) together
    with ``sum(v) = 1``. One balance equation of the transposed system is
    replaced by the normalisation row, which is valid exactly when the null
    space is one-dimensional.

    Raises:
        Reducible: if the null space has dimension greater than one.
    """
    q = as_matrix(q)
    n = q.shape[0]
    if kind == "generator":
        if np.max(np.abs(q.sum(axis=1))) > 1e-9 * max(1.0, float(np.max(np.abs(q)))):
            raise ValidationError("generator rows must sum to zero")
        system = q.T.copy()
    elif kind == "stochastic":
        if np.any(q < -1e-14) or np.max(np.abs(q.sum(axis=1) - 1.0)) > 1e-9:
            raise ValidationError("stochastic matrix needs nonnegative entries and unit row sums")
        system = q.T - np.eye(n)
    else:
        raise ValueError(f"unknown kind {kind!r}")

    if numerical_rank(system) < n - 1:
        raise Reducible("stationary vector is not unique")
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    v = solve(system, rhs)
    v = np.where(np.abs(v) < 1e-15, 0.0, v)
    if np.any(v < -1e-12):
        raise Reducible("stationary solve produced negative mass")
    v = np.clip(v, 0.0, None)
    return v / v.sum()
