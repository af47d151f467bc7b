"""Sample statistics of observed or simulated traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShort, ValidationError, ZeroVariance
from .moments import MomentSet
from .simulate import BivariateTrace


def lag_autocorr(values, lag: int = 1) -> float:
    """Biased sample autocorrelation with the global mean.

    sum_{i<=n-l} (x_i - m)(x_{i+l} - m) / sum_i (x_i - m)^2
    """
    x = np.asarray(values, dtype=float)
    if lag < 1:
        raise ValidationError("lag must be >= 1")
    if x.shape[0] <= lag + 1:
        raise TooShort(f"need more than {lag + 1} values for a lag-{lag} autocorrelation")
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 1e-300 or np.ptp(x) == 0.0:
        raise ZeroVariance("sequence is constant")
    return float(d[:-lag] @ d[lag:]) / denom


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise ZeroVariance("a component is constant")
    return float(dx @ dy) / np.sqrt(sxx * syy)


def empirical_moment_set(trace: BivariateTrace) -> MomentSet:
    """Raw sample moments, lag-1 autocorrelations, joint moments and Pearson correlation."""
    if len(trace) < 3:
        raise TooShort("a trace needs at least 3 pairs")
    t, k = trace.t, trace.k
    degenerate = []

    def guarded(name, fn, *args):
        try:
            return fn(*args)
        except ZeroVariance:
            degenerate.append(name)
            return 0.0

    rho_t = guarded("rhoT1", lag_autocorr, t, 1)
    rho_k = guarded("rhoK1", lag_autocorr, k, 1)
    corr = guarded("corrTK", _pearson, t, k)
    return MomentSet(
        muT=tuple(float(np.mean(t ** r)) for r in (1, 2, 3)),
        rhoT1=rho_t,
        muK=tuple(float(np.mean(k ** r)) for r in (1, 2, 3)),
        rhoK1=rho_k,
        eta11=float(np.mean(t * k)),
        eta21=float(np.mean(t * t * k)),
        eta12=float(np.mean(t * k * k)),
        corrTK=corr,
        degenerate=tuple(degenerate),
    )


def joint_moment_estimates(t: np.ndarray, k: np.ndarray, include_eta22: bool = False) -> np.ndarray:
    """Sample (eta11, eta21, eta12[, eta22]); the ABC summary statistics."""
    tk = t * k
    out = [tk.mean(), (tk * t).mean(), (tk * k).mean()]
    if include_eta22:
        out.append((tk * tk).mean())
    return np.array(out)


@dataclass(frozen=True, eq=False)
class CountingPath:
    """Failure epochs on the time and the distance scale."""

    cum_t: np.ndarray
    cum_k: np.ndarray

    def n_t(self, t):
        """N_T(t): failures with epoch <= t."""
        return np.searchsorted(self.cum_t, t, side="right")

    def n_k(self, k):
        return np.searchsorted(self.cum_k, k, side="right")

    def n_joint(self, t, k):
        """N_(T,K)(t, k): failures that occurred by time t and by distance k."""
        t = np.asarray(t, dtype=float)
        k = np.asarray(k, dtype=float)
        return np.minimum(self.n_t(t), self.n_k(k))


def counting_path(trace: BivariateTrace) -> CountingPath:
    if len(trace) == 0:
        raise TooShort("empty trace")
    return CountingPath(np.cumsum(trace.t), np.cumsum(trace.k))
