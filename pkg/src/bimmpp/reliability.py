"""Monte Carlo reliability measures for the failure counting processes."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCondition, HorizonTooShort, ValidationError
from .simulate import RELIABILITY, RngStream, _kernel_args, _trace_kernel

KINDS = (
    "cond_prob_T_given_K",
    "expected_NT",
    "expected_joint_increment",
    "pmf_NT",
    "pmf_NK",
    "joint_no_failure",
    "joint_no_failure_window",
)
_NEEDS = {
    "cond_prob_T_given_K": ("t", "k"),
    "expected_NT": ("t",),
    "expected_joint_increment": ("t", "k", "dt", "dk"),
    "pmf_NT": ("t",),
    "pmf_NK": ("k",),
    "joint_no_failure": ("t", "k"),
    "joint_no_failure_window": ("t", "k", "dt", "dk"),
}
MIN_COVERAGE = 0.99


def _floats(values) -> tuple[float, ...]:
    if values is None:
        return ()
    if np.ndim(values) == 0:
        values = [values]
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ReliabilityQuery:
    """One reliability question evaluated on a grid of thresholds.

    ``t`` are times, ``k`` distances, ``n`` counts (pmf kinds only; empty
    means the whole observed support) and ``dt``/``dk`` the window widths of
    the increment kinds. Grids are the Cartesian product of ``t`` and ``k``.
    """

    kind: str
    t: tuple[float, ...] = ()
    k: tuple[float, ...] = ()
    n: tuple[int, ...] = ()
    dt: float | None = None
    dk: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown query kind {self.kind!r}")
        object.__setattr__(self, "t", _floats(self.t))
        object.__setattr__(self, "k", _floats(self.k))
        object.__setattr__(self, "n", tuple(int(v) for v in (self.n or ())))
        for name in _NEEDS[self.kind]:
            value = getattr(self, name)
            if value is None or value == ():
                raise ValidationError(f"{self.kind} needs '{name}'")
        if any(math.isnan(v) or v < 0.0 for v in (*self.t, *self.k)):
            raise ValidationError("thresholds must be nonnegative")
        if any(v < 0 for v in self.n):
            raise ValidationError("counts must be nonnegative")
        if "dt" in _NEEDS[self.kind]:
            if not (self.dt > 0.0 and self.dk > 0.0 and math.isfinite(self.dt) and math.isfinite(self.dk)):
                raise ValidationError("window widths dt, dk must be positive and finite")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("t", "k", "n"):
            if getattr(self, name):
                out[name] = list(getattr(self, name))
        if self.dt is not None:
            out["dt"] = self.dt
        if self.dk is not None:
            out["dk"] = self.dk
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ReliabilityQuery":
        if not isinstance(data, dict) or "kind" not in data:
            raise ValidationError("a query must be an object with a 'kind'")
        unknown = set(data) - {"kind", "t", "k", "n", "dt", "dk"}
        if unknown:
            raise ValidationError(f"unknown query fields {sorted(unknown)}")
        try:
            return cls(data["kind"], data.get("t", ()), data.get("k", ()), data.get("n", ()),
                       data.get("dt"), data.get("dk"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed query: {exc}") from None


@dataclass(frozen=True)
class ReliabilityReport:
    """Estimates with Monte Carlo standard errors, one result block per query."""

    results: tuple[dict, ...]
    replications: int
    horizon: int
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "horizon": self.horizon,
            "seed": self.seed,
            "results": list(self.results),
        }


@dataclass(frozen=True, eq=False)
class PathSet:
    """Replicated stationary traces: inter-failure pairs and their partial sums (R x n)."""

    t: np.ndarray
    k: np.ndarray
    cum_t: np.ndarray = field(init=False)
    cum_k: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cum_t", np.cumsum(self.t, axis=1))
        object.__setattr__(self, "cum_k", np.cumsum(self.k, axis=1))

    @property
    def replications(self) -> int:
        return self.t.shape[0]

    def counts(self, cum: np.ndarray, x: float) -> np.ndarray:
        """Per-replication number of epochs <= x."""
        return np.array([np.searchsorted(row, x, side="right") for row in cum])

    def n_t(self, t: float) -> np.ndarray:
        return self.counts(self.cum_t, t)

    def n_k(self, k: float) -> np.ndarray:
        return self.counts(self.cum_k, k)

    def n_joint(self, t: float, k: float) -> np.ndarray:
        # both partial-sum sequences increase, so the failures counted by time
        # t and by distance k form a common prefix of the trace
        return np.minimum(self.n_t(t), self.n_k(k))

    def coverage_t(self, t: float) -> float:
        return float(np.mean(self.cum_t[:, -1] > t))

    def coverage_k(self, k: float) -> float:
        return float(np.mean(self.cum_k[:, -1] > k))

    def coverage_joint(self, t: float, k: float) -> float:
        return float(np.mean((self.cum_t[:, -1] > t) | (self.cum_k[:, -1] > k)))


def _simulate_block(indices, n, rates, switch, phi1, seed):
    t = np.empty((len(indices), n))
    k = np.empty((len(indices), n))
    for row, r in enumerate(indices):
        gen = RngStream(seed, int(r), RELIABILITY).generator()
        t[row], k[row], _ = _trace_kernel(gen, n, rates, switch, phi1)
    return t, k


def simulate_paths(params, replications: int, n_per_rep: int, seed: int = 0, threads: int = 1) -> PathSet:
    """Replication r uses its own stream, so the result ignores ``threads``."""
    if replications < 1:
        raise ValidationError("replications must be >= 1")
    if n_per_rep < 1:
        raise ValidationError("n_per_rep must be >= 1")
    rates, switch, phi1 = _kernel_args(params)
    blocks = [b for b in np.array_split(np.arange(replications), max(1, threads) * 4) if b.size]

    def run(block):
        return _simulate_block(block, int(n_per_rep), rates, switch, phi1, seed)

    if threads <= 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    return PathSet(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def conditional_probability(t_values: np.ndarray, k_values: np.ndarray, t: float, k: float) -> tuple[float, float]:
    """P(T < t | K < k) from pooled pairs, with its binomial standard error."""
    cond = k_values < k
    m = int(cond.sum())
    if m == 0:
        raise EmptyCondition(f"no pair has K < {k}")
    p = float(np.mean(t_values[cond] < t))
    return p, math.sqrt(p * (1.0 - p) / m)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std() / math.sqrt(x.shape[0])) if x.shape[0] > 1 else 0.0
    return float(x.mean()), se


def _require(coverage: float, what: str) -> None:
    if coverage < MIN_COVERAGE:
        raise HorizonTooShort(
            f"only {coverage:.1%} of replications reach {what}; increase n_per_rep"
        )


def _cell(estimate: float, se: float, **coords) -> dict:
    return {**coords, "estimate": estimate, "standard_error": se}


def _pmf_cells(counts: np.ndarray, wanted: tuple[int, ...], label: str, x: float) -> list[dict]:
    support = wanted or tuple(range(int(counts.max()) + 1))
    return [_cell(*_mean_se(counts == n), **{label: x, "n": n}) for n in support]


def answer(paths: PathSet, query: ReliabilityQuery) -> list[dict]:
    """Evaluate one query on a shared path set; returns its list of cells."""
    kind = query.kind
    cells: list[dict] = []
    if kind == "cond_prob_T_given_K":
        tv, kv = paths.t.ravel(), paths.k.ravel()
        for t in query.t:
            for k in query.k:
                try:
                    cells.append(_cell(*conditional_probability(tv, kv, t, k), t=t, k=k))
                except EmptyCondition as exc:
                    cells.append({"t": t, "k": k, "estimate": None, "standard_error": None,
                                  "error": type(exc).__name__})
    elif kind == "expected_NT":
        for t in query.t:
            _require(paths.coverage_t(t), f"t={t}")
            cells.append(_cell(*_mean_se(paths.n_t(t)), t=t))
    elif kind == "pmf_NT":
        for t in query.t:
            _require(paths.coverage_t(t), f"t={t}")
            cells.extend(_pmf_cells(paths.n_t(t), query.n, "t", t))
    elif kind == "pmf_NK":
        for k in query.k:
            _require(paths.coverage_k(k), f"k={k}")
            cells.extend(_pmf_cells(paths.n_k(k), query.n, "k", k))
    elif kind == "joint_no_failure":
        for t in query.t:
            for k in query.k:
                _require(paths.coverage_joint(t, k), f"(t={t}, k={k})")
                cells.append(_cell(*_mean_se(paths.n_joint(t, k) == 0), t=t, k=k))
    else:
        # the two window kinds
        for t in query.t:
            for k in query.k:
                t2, k2 = t + query.dt, k + query.dk
                _require(paths.coverage_joint(t2, k2), f"(t={t2}, k={k2})")
                inc = paths.n_joint(t2, k2) - paths.n_joint(t, k)
                values = inc if kind == "expected_joint_increment" else inc == 0
                cells.append(_cell(*_mean_se(values), t=t, k=k, dt=query.dt, dk=query.dk))
    return cells


def estimate(params, queries, replications: int = 1000, n_per_rep: int = 1000,
             seed: int = 0, threads: int = 1) -> ReliabilityReport:
    """Answer every query from one set of simulated replications.

    All queries share the same paths (common random numbers), so curves over
    thresholds are exactly monotone where the underlying quantity is.
    """
    queries = [q if isinstance(q, ReliabilityQuery) else ReliabilityQuery.from_dict(q) for q in queries]
    paths = simulate_paths(params, replications, n_per_rep, seed, threads)
    results = tuple({**q.to_dict(), "cells": answer(paths, q)} for q in queries)
    return ReliabilityReport(results, int(replications), int(n_per_rep), int(seed))
