"""Parameters of the bivariate MMPP(2) and its matrix representations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChain, InvalidParameter, ValidationError
from .numerics import stationary_vector

# Reward patterns: column 0 accrues time, column 1 accrues distance.
MAIN_REWARDS = np.array([[1, 1], [1, 0], [0, 1], [1, 1], [1, 0], [0, 1]], dtype=float)
ALT_REWARDS = np.array([[1, 0], [0, 1], [1, 1], [1, 0], [0, 1], [1, 1]], dtype=float)


@dataclass(frozen=True)
class ModelParams:
    """The eight parameters of a bivariate MMPP(2).

    ``a`` and ``b`` are the probabilities of leaving state 1 / state 2 without
    a failure at the end of a sojourn. ``lam`` and ``omega`` are the
    Marshall-Olkin rate triples used in state 1 and state 2.
    """

    a: float
    b: float
    lam: tuple[float, float, float]
    omega: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        object.__setattr__(self, "omega", tuple(float(x) for x in self.omega))
        if len(self.lam) != 3 or len(self.omega) != 3:
            raise InvalidParameter("lambda and omega must be rate triples")

    @property
    def gamma_t1(self) -> float:
        return self.lam[0] + self.lam[2]

    @property
    def gamma_k1(self) -> float:
        return self.lam[1] + self.lam[2]

    @property
    def gamma_t2(self) -> float:
        return self.omega[0] + self.omega[2]

    @property
    def gamma_k2(self) -> float:
        return self.omega[1] + self.omega[2]

    @property
    def gammas(self) -> tuple[float, float, float, float]:
        """(gamma_t1, gamma_t2, gamma_k1, gamma_k2)."""
        return (self.gamma_t1, self.gamma_t2, self.gamma_k1, self.gamma_k2)

    def swap(self) -> "ModelParams":
        """Relabel the hidden states; the process law is unchanged."""
        return ModelParams(self.b, self.a, self.omega, self.lam)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "lambda": list(self.lam), "omega": list(self.omega)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        try:
            return cls(data["a"], data["b"], tuple(data["lambda"]), tuple(data["omega"]))
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"malformed parameter object: {exc}") from None


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if every bound holds, else raise InvalidParameter."""
    values = (params.a, params.b, *params.lam, *params.omega)
    if not all(math.isfinite(v) for v in values):
        raise InvalidParameter("parameters must be finite")
    if not 0.0 < params.a < 1.0:
        raise InvalidParameter(f"a must lie in (0, 1), got {params.a}")
    if not 0.0 < params.b < 1.0:
        raise InvalidParameter(f"b must lie in (0, 1), got {params.b}")
    for name, triple in (("lambda", params.lam), ("omega", params.omega)):
        if triple[0] <= 0.0:
            raise InvalidParameter(f"{name}1 must be positive, got {triple[0]}")
        if triple[1] <= 0.0:
            raise InvalidParameter(f"{name}2 must be positive, got {triple[1]}")
        if triple[2] < 0.0:
            raise InvalidParameter(f"{name}3 must be nonnegative, got {triple[2]}")
    return params


def stationary_phi(a: float, b: float) -> np.ndarray:
    """Stationary phase vector at failure epochs of an MMPP(2).

    Depends only on the switching probabilities.
    """
    den = b * (1.0 - a) + a * (1.0 - b)
    if den < 1e-14:
        raise DegenerateChain("switching probabilities give no stationary phase law")
    phi1 = b * (1.0 - a) / den
    return np.array([phi1, 1.0 - phi1])


@dataclass(frozen=True, eq=False)
class MarginalRep:
    """Univariate MMPP(2) ``(phi, D0, D1)`` with the stationary vector ``pi`` of D0 + D1."""

    phi: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        _check_map(self.phi, self.d0, self.d1)


def marginal_rep(a: float, b: float, gamma1: float, gamma2: float) -> MarginalRep:
    """MMPP(2) with sojourn rates ``gamma1``, ``gamma2`` and switching probabilities a, b."""
    d0 = np.array([[-gamma1, gamma1 * a], [gamma2 * b, -gamma2]])
    d1 = np.array([[gamma1 * (1.0 - a), 0.0], [0.0, gamma2 * (1.0 - b)]])
    pi = stationary_vector(d0 + d1, "generator")
    return MarginalRep(stationary_phi(a, b), d0, d1, pi)


def marginal_reps(params: ModelParams) -> tuple[MarginalRep, MarginalRep]:
    """The time and the distance marginal processes, in that order."""
    p = validate(params)
    time_rep = marginal_rep(p.a, p.b, p.gamma_t1, p.gamma_t2)
    dist_rep = marginal_rep(p.a, p.b, p.gamma_k1, p.gamma_k2)
    return time_rep, dist_rep


@dataclass(frozen=True, eq=False)
class MatrixRep:
    """Multivariate phase-type representation ``(phi, D0, D1, R)`` of the pair process."""

    phi: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    r: np.ndarray
    form: str = field(default="main")

    def __post_init__(self):
        _check_map(self.phi, self.d0, self.d1)
        if self.r.shape != (self.d0.shape[0], 2) or not np.all(np.isin(self.r, (0.0, 1.0))):
            raise ValidationError("reward matrix must be n x 2 with 0/1 entries")

    @property
    def size(self) -> int:
        return self.d0.shape[0]


def _check_map(phi, d0, d1, tol: float = 1e-9) -> None:
    n = d0.shape[0]
    if d0.shape != (n, n) or d1.shape != (n, n) or phi.shape != (n,):
        raise ValidationError("inconsistent representation shapes")
    scale = max(1.0, float(np.max(np.abs(d0))))
    off = d0 - np.diag(np.diag(d0))
    if np.any(off < -tol * scale) or np.any(d1 < -tol * scale) or np.any(np.diag(d0) >= 0.0):
        raise ValidationError("D0 must be a sub-generator and D1 nonnegative")
    if np.max(np.abs((d0 + d1).sum(axis=1))) > tol * scale:
        raise ValidationError("rows of D0 + D1 must sum to zero")
    if np.any(phi < -tol) or abs(phi.sum() - 1.0) > tol:
        raise ValidationError("initial vector must be a probability vector")


def full_matrix_rep(params: ModelParams) -> MatrixRep:
    """Six-phase representation: three phases per hidden state.

    Within a state the first phase has both components running, the second
    only the time component and the third only the distance component.
    """
    p = validate(params)
    a, b = p.a, p.b
    l1, l2, l3 = p.lam
    w1, w2, w3 = p.omega
    gt1, gk1, gt2, gk2 = p.gamma_t1, p.gamma_k1, p.gamma_t2, p.gamma_k2
    phi1, phi2 = stationary_phi(a, b)

    d0 = np.array([
        [-(l1 + l2 + l3), l2, l1, l3 * a, 0.0, 0.0],
        [0.0, -gt1, 0.0, gt1 * a, 0.0, 0.0],
        [0.0, 0.0, -gk1, gk1 * a, 0.0, 0.0],
        [w3 * b, 0.0, 0.0, -(w1 + w2 + w3), w2, w1],
        [gt2 * b, 0.0, 0.0, 0.0, -gt2, 0.0],
        [gk2 * b, 0.0, 0.0, 0.0, 0.0, -gk2],
    ])
    d1 = np.zeros((6, 6))
    d1[0:3, 0] = np.array([l3, gt1, gk1]) * (1.0 - a)
    d1[3:6, 3] = np.array([w3, gt2, gk2]) * (1.0 - b)
    phi = np.array([phi1, 0.0, 0.0, phi2, 0.0, 0.0])
    return MatrixRep(phi, d0, d1, MAIN_REWARDS.copy(), "main")


def alt_matrix_rep(params: ModelParams) -> MatrixRep:
    """Equivalent six-phase representation where each sojourn ends in the joint phase.

    Per state the phases are: time only, distance only, both running. The
    reward pattern is the one that makes this form agree with
    :func:`full_matrix_rep` in distribution.
    """
    p = validate(params)
    a, b = p.a, p.b
    l1, l2, l3 = p.lam
    w1, w2, w3 = p.omega
    lam, om = l1 + l2 + l3, w1 + w2 + w3
    gt1, gk1, gt2, gk2 = p.gamma_t1, p.gamma_k1, p.gamma_t2, p.gamma_k2
    phi1, phi2 = stationary_phi(a, b)

    d0 = np.array([
        [-gt1, 0.0, gt1, 0.0, 0.0, 0.0],
        [0.0, -gk1, gk1, 0.0, 0.0, 0.0],
        [0.0, 0.0, -lam, lam / om * w2 * a, lam / om * w1 * a, lam / om * w3 * a],
        [0.0, 0.0, 0.0, -gt2, 0.0, gt2],
        [0.0, 0.0, 0.0, 0.0, -gk2, gk2],
        [om / lam * l2 * b, om / lam * l1 * b, om / lam * l3 * b, 0.0, 0.0, -om],
    ])
    d1 = np.zeros((6, 6))
    d1[2, 0:3] = (1.0 - a) * np.array([l2, l1, l3])
    d1[5, 3:6] = (1.0 - b) * np.array([w2, w1, w3])
    phi = np.array([
        phi1 * l2 / lam, phi1 * l1 / lam, phi1 * l3 / lam,
        phi2 * w2 / om, phi2 * w1 / om, phi2 * w3 / om,
    ])
    return MatrixRep(phi, d0, d1, ALT_REWARDS.copy(), "alt")


def canonicalize(params: ModelParams) -> ModelParams:
    """Pick the state labelling with gamma_t1 >= gamma_t2.

    Ties fall back to gamma_k1 >= gamma_k2, then a <= b.
    """
    swapped = params.swap()

    def key(p: ModelParams):
        return (p.gamma_t1 - p.gamma_t2, p.gamma_k1 - p.gamma_k2, p.b - p.a)

    return params if key(params) >= key(swapped) else swapped
