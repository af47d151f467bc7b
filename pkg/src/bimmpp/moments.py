"""Closed-form moments and transforms of the bivariate MMPP(2)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import Divergent, UnsupportedOrder, ValidationError, ZeroVariance
from .model import MarginalRep, MatrixRep, ModelParams, full_matrix_rep, marginal_reps
from .numerics import inverse, mat_exp, solve

MAX_JOINT_ORDER = 4
SPECTRAL_TOL = 1e-10

FIELD_NAMES = (
    "muT1", "muT2", "muT3", "rhoT1",
    "muK1", "muK2", "muK3", "rhoK1",
    "eta11", "eta21", "eta12", "corrTK",
)


@dataclass(frozen=True)
class MomentSet:
    """The twelve summary statistics used for fitting and model checking.

    ``degenerate`` names the correlation fields that were reported as 0
    because they are undefined for the model or sample at hand.
    """

    muT: tuple[float, float, float]
    rhoT1: float
    muK: tuple[float, float, float]
    rhoK1: float
    eta11: float
    eta21: float
    eta12: float
    corrTK: float
    degenerate: tuple[str, ...] = ()

    def values(self) -> tuple[float, ...]:
        return (*self.muT, self.rhoT1, *self.muK, self.rhoK1,
                self.eta11, self.eta21, self.eta12, self.corrTK)

    def to_dict(self) -> dict:
        return dict(zip(FIELD_NAMES, (float(v) for v in self.values())))

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSet":
        v = [float(data[name]) for name in FIELD_NAMES]
        return cls(tuple(v[0:3]), v[3], tuple(v[4:7]), v[7], v[8], v[9], v[10], v[11])


# -- univariate marginals ---------------------------------------------------

def _lag_covariance(phi, left, p, right, lag):
    """Cov(X_1, Y_{1+lag}) = sum_i (a_i - E[X] phi_i) (b_i - E[Y]).

    a = phi L P^lag and b = R e. Writing the covariance with both factors
    centred avoids subtracting two nearly equal products when the sequence
    is close to a renewal process.
    """
    a = phi @ left
    mean_x = float(a.sum())
    for _ in range(lag):
        a = a @ p
    b = right @ np.ones(p.shape[0])
    mean_y = float(phi @ b)
    return float((a - mean_x * phi) @ (b - mean_y))


def marginal_moment(rep: MarginalRep, r: int) -> float:
    """Stationary raw moment E(T^r) = r! phi (-D0)^-r e."""
    if r < 1:
        raise ValidationError("moment order must be >= 1")
    u = inverse(-rep.d0)
    v = rep.phi
    for _ in range(r):
        v = v @ u
    return math.factorial(r) * float(v.sum())


def marginal_autocorr(rep: MarginalRep, lag: int) -> float:
    """Lag-``lag`` autocorrelation of the inter-failure sequence.

    Uses E(T_1 T_{1+l}) = phi U P^l U e with U = (-D0)^-1 and P = U D1.

    Raises:
        ZeroVariance: when the correlation is structurally zero at every lag
            (the phase at a failure carries no information about the next
            inter-failure mean, as in a Poisson process).
    """
    if lag < 1:
        raise ValidationError("lag must be >= 1")
    u = inverse(-rep.d0)
    e = np.ones(rep.d0.shape[0])
    p = u @ rep.d1
    ue = u @ e
    mu1 = float(rep.phi @ ue)
    mu2 = 2.0 * float(rep.phi @ u @ ue)
    var = mu2 - mu1 * mu1
    if var <= 1e-14 * mu1 * mu1:
        raise ZeroVariance("inter-failure variance is zero")
    # For two phases P has eigenvalues 1 and trace(P) - 1, so the lag covariance
    # is (trace(P) - 1)^l * mu1 * (pi U e - mu1).
    memory = float(np.trace(p)) - 1.0 if p.shape[0] == 2 else 1.0
    mean_gap = float(rep.pi @ ue) - mu1
    if abs(memory) <= 1e-12 or abs(mean_gap) <= 1e-12 * mu1:
        raise ZeroVariance("inter-failure times are uncorrelated by construction")
    return _lag_covariance(rep.phi, u, p, u, lag) / var


def interfailure_cdf(rep: MarginalRep, t):
    """P(T <= t) = 1 - phi exp(D0 t) e; accepts a scalar or an array of times."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0.0):
        raise ValidationError("t must be nonnegative")
    e = np.ones(rep.d0.shape[0])
    out = np.array([1.0 - float(rep.phi @ mat_exp(rep.d0 * x) @ e) for x in ts])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(t) == 0 else out


# -- the pair process ---------------------------------------------------------

def _reward_operators(rep: MatrixRep) -> tuple[np.ndarray, np.ndarray]:
    u = inverse(-rep.d0)
    return u * rep.r[:, 0], u * rep.r[:, 1]


def joint_moment(rep: MatrixRep, n: int, m: int) -> float:
    """eta_nm = E(T^n K^m) for one stationary inter-failure pair.

    Sums over all (n+m)! orderings of the reward columns, duplicates included.
    """
    if n < 0 or m < 0 or n + m < 1:
        raise ValidationError("need n, m >= 0 and n + m >= 1")
    if n + m > MAX_JOINT_ORDER:
        raise UnsupportedOrder(f"joint moments are implemented up to order {MAX_JOINT_ORDER}")
    ops = _reward_operators(rep)
    e = np.ones(rep.size)
    total = 0.0
    for order in itertools.permutations([0] * n + [1] * m):
        v = rep.phi
        for col in order:
            v = v @ ops[col]
        total += float(v @ e)
    return total


def _transform_matrix(rep: MatrixRep, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2,):
        raise ValidationError("theta must be a 2-vector")
    m = -np.diag(rep.r @ theta) - rep.d0
    if np.min(np.linalg.eigvals(m).real) <= SPECTRAL_TOL:
        raise Divergent(f"transform diverges at theta={theta.tolist()}")
    return m


def mgf(rep: MatrixRep, theta) -> float:
    """Moment-generating function E(exp(theta_1 T + theta_2 K)) of one pair."""
    m = _transform_matrix(rep, theta)
    return float(rep.phi @ solve(m, rep.d1 @ np.ones(rep.size)))


def sequence_transform(rep: MatrixRep, thetas) -> float:
    """Joint MGF of the first len(thetas) consecutive pairs (same sign convention as mgf)."""
    v = rep.phi
    for theta in thetas:
        m = _transform_matrix(rep, theta)
        v = v @ inverse(m) @ rep.d1
    return float(v.sum())


_COMPONENT = {"T": 0, "K": 1}


def cross_moment(rep: MatrixRep, first: str, second: str, lag: int) -> float:
    """E(X_1 Y_{1+lag}) with X, Y each one of "T" (time) or "K" (distance)."""
    if lag < 1:
        raise ValidationError("lag must be >= 1")
    try:
        ops = _reward_operators(rep)
        left, right = ops[_COMPONENT[first]], ops[_COMPONENT[second]]
    except KeyError:
        raise ValidationError("components must be 'T' or 'K'") from None
    p = inverse(-rep.d0) @ rep.d1
    v = rep.phi @ left
    for _ in range(lag):
        v = v @ p
    return float(v @ right @ np.ones(rep.size))


# -- Marshall-Olkin building block --------------------------------------------

def bve_cross_moment(lam) -> float:
    """E(XY) for (X, Y) ~ BVE(lam1, lam2, lam3)."""
    l1, l2, l3 = lam
    return (1.0 / (l1 + l3) + 1.0 / (l2 + l3)) / (l1 + l2 + l3)


def bve_correlation(lam) -> float:
    l1, l2, l3 = lam
    return l3 / (l1 + l2 + l3)


# -- aggregated statistics ----------------------------------------------------

def _corr(eta11, mu_t, mu_k) -> float:
    var_t = mu_t[1] - mu_t[0] ** 2
    var_k = mu_k[1] - mu_k[0] ** 2
    return (eta11 - mu_t[0] * mu_k[0]) / math.sqrt(var_t * var_k)


def theoretical_moment_set(params: ModelParams) -> MomentSet:
    """All twelve statistics: marginal ones from the 2x2 marginals, joint ones from the 6x6 form."""
    time_rep, dist_rep = marginal_reps(params)
    mu_t = tuple(marginal_moment(time_rep, r) for r in (1, 2, 3))
    mu_k = tuple(marginal_moment(dist_rep, r) for r in (1, 2, 3))
    degenerate = []
    rhos = []
    for name, rep in (("rhoT1", time_rep), ("rhoK1", dist_rep)):
        try:
            rhos.append(marginal_autocorr(rep, 1))
        except ZeroVariance:
            rhos.append(0.0)
            degenerate.append(name)
    full = full_matrix_rep(params)
    eta11 = joint_moment(full, 1, 1)
    return MomentSet(
        muT=mu_t, rhoT1=rhos[0], muK=mu_k, rhoK1=rhos[1],
        eta11=eta11, eta21=joint_moment(full, 2, 1), eta12=joint_moment(full, 1, 2),
        corrTK=_corr(eta11, mu_t, mu_k), degenerate=tuple(degenerate),
    )


def moment_set_from_rep(rep: MatrixRep) -> MomentSet:
    """All twelve statistics computed from a six-phase representation alone."""
    mu_t = tuple(joint_moment(rep, r, 0) for r in (1, 2, 3))
    mu_k = tuple(joint_moment(rep, 0, r) for r in (1, 2, 3))
    ops = _reward_operators(rep)
    p = inverse(-rep.d0) @ rep.d1
    rho_t = _lag_covariance(rep.phi, ops[0], p, ops[0], 1) / (mu_t[1] - mu_t[0] ** 2)
    rho_k = _lag_covariance(rep.phi, ops[1], p, ops[1], 1) / (mu_k[1] - mu_k[0] ** 2)
    eta11 = joint_moment(rep, 1, 1)
    return MomentSet(
        muT=mu_t, rhoT1=rho_t, muK=mu_k, rhoK1=rho_k,
        eta11=eta11, eta21=joint_moment(rep, 2, 1), eta12=joint_moment(rep, 1, 2),
        corrTK=_corr(eta11, mu_t, mu_k),
    )
