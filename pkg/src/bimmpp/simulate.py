"""Marshall-Olkin sampling and trace generation for the bivariate MMPP(2)."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import InvalidParameter, ValidationError
from .model import ModelParams, stationary_phi, validate

# Stream families; keep distinct so that e.g. restart 3 and ABC draw 3 never
# share random numbers under the same user seed.
TRACE, RESTART, ABC, RELIABILITY = 0, 1, 2, 3


@dataclass(frozen=True)
class RngStream:
    """A reproducible, independent random stream identified by (seed, stream_id).

    ``family`` separates the uses of one user seed (plain traces, optimiser
    restarts, ABC draws, reliability replications).
    """

    seed: int
    stream_id: int = 0
    family: int = TRACE

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.family), int(self.stream_id)))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or a numpy Generator")


@dataclass(frozen=True, eq=False)
class BivariateTrace:
    """Consecutive inter-failure (time, distance) pairs."""

    t: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if t.ndim != 1 or t.shape != k.shape:
            raise ValidationError("t and k must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(k))):
            raise ValidationError("trace entries must be finite")
        if np.any(t <= 0.0) or np.any(k <= 0.0):
            raise ValidationError("inter-failure times and distances must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_pairs(cls, pairs) -> "BivariateTrace":
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.t, self.k])

    def __len__(self) -> int:
        return self.t.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivariateTrace):
            return NotImplemented
        return np.array_equal(self.t, other.t) and np.array_equal(self.k, other.k)


def sample_bve(lam, rng, size: int | None = None):
    """Draw from BVE(lam1, lam2, lam3) via the fatal-shock construction.

    X = min(Z1, Z3), Y = min(Z2, Z3) with independent exponential shocks; a
    common shock Z3 produces the singular mass on X == Y. Returns scalars when
    ``size`` is None, otherwise two arrays.
    """
    l1, l2, l3 = (float(x) for x in lam)
    if l1 <= 0.0 or l2 <= 0.0 or l3 < 0.0:
        raise InvalidParameter("BVE needs lam1, lam2 > 0 and lam3 >= 0")
    gen = as_generator(rng)
    z1 = gen.exponential(1.0 / l1, size)
    z2 = gen.exponential(1.0 / l2, size)
    z3 = gen.exponential(1.0 / l3, size) if l3 > 0.0 else np.full(() if size is None else size, np.inf)
    x, y = np.minimum(z1, z3), np.minimum(z2, z3)
    if size is None:
        return float(x), float(y)
    return x, y


@numba.njit(cache=True, nogil=True)
def _shock(rng, rate):
    if rate > 0.0:
        return rng.exponential(1.0 / rate)
    return np.inf


@numba.njit(cache=True, nogil=True)
def _sojourn(rng, state, rates, switch):
    # one hidden-state visit: BVE increment, then switch (no failure) or fail
    base = 3 * state
    z1 = _shock(rng, rates[base])
    z2 = _shock(rng, rates[base + 1])
    z3 = _shock(rng, rates[base + 2])
    flip = rng.random() < switch[state]
    return min(z1, z3), min(z2, z3), flip


@numba.njit(cache=True, nogil=True)
def _trace_kernel(rng, n, rates, switch, phi1):
    t = np.zeros(n)
    k = np.zeros(n)
    state = 0 if rng.random() < phi1 else 1
    i = 0
    visits = 0
    while i < n:
        x, y, flip = _sojourn(rng, state, rates, switch)
        t[i] += x
        k[i] += y
        visits += 1
        if flip:
            state = 1 - state
        else:
            i += 1
    return t, k, visits


@numba.njit(cache=True, nogil=True)
def _path_kernel(rng, n, rates, switch, phi1):
    cap = 2 * n + 16
    states = np.empty(cap, dtype=np.int64)
    xs = np.empty(cap)
    ys = np.empty(cap)
    fails = np.empty(cap, dtype=np.bool_)
    state = 0 if rng.random() < phi1 else 1
    i = 0
    j = 0
    while i < n:
        if j == cap:
            cap *= 2
            states = np.concatenate((states, np.empty(cap - j, dtype=np.int64)))
            xs = np.concatenate((xs, np.empty(cap - j)))
            ys = np.concatenate((ys, np.empty(cap - j)))
            fails = np.concatenate((fails, np.empty(cap - j, dtype=np.bool_)))
        x, y, flip = _sojourn(rng, state, rates, switch)
        states[j] = state
        xs[j] = x
        ys[j] = y
        fails[j] = not flip
        j += 1
        if flip:
            state = 1 - state
        else:
            i += 1
    return states[:j], xs[:j], ys[:j], fails[:j]


def _kernel_args(params: ModelParams):
    p = validate(params)
    rates = np.array([*p.lam, *p.omega], dtype=float)
    switch = np.array([p.a, p.b], dtype=float)
    return rates, switch, float(stationary_phi(p.a, p.b)[0])


def simulate_trace(params: ModelParams, n: int, rng) -> BivariateTrace:
    """Simulate ``n`` consecutive stationary failures.

    The initial hidden state is drawn from the stationary phase law at
    failures. Each sojourn adds a BVE increment from the current state's rate
    triple to the pending pair; the state then flips without a failure
    (probability a or b) or a failure closes the pair and the state is kept.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rates, switch, phi1 = _kernel_args(params)
    t, k, _ = _trace_kernel(as_generator(rng), int(n), rates, switch, phi1)
    return BivariateTrace(t, k)


@dataclass(frozen=True, eq=False)
class SojournPath:
    """Sojourn-level record of a simulation: hidden state, increments, failure flag."""

    states: np.ndarray
    x: np.ndarray
    y: np.ndarray
    failure: np.ndarray

    def to_trace(self) -> BivariateTrace:
        ends = np.flatnonzero(self.failure)
        starts = np.concatenate(([0], ends[:-1] + 1))
        t = np.add.reduceat(self.x, starts)
        k = np.add.reduceat(self.y, starts)
        return BivariateTrace(t, k)


def simulate_path(params: ModelParams, n: int, rng) -> SojournPath:
    """Same random draws as :func:`simulate_trace`, keeping every sojourn."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rates, switch, phi1 = _kernel_args(params)
    states, xs, ys, fails = _path_kernel(as_generator(rng), int(n), rates, switch, phi1)
    return SojournPath(states + 1, xs, ys, fails)
