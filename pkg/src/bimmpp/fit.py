"""Two-step inference: marginal moment matching, then ABC for the common-shock rates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .empirical import empirical_moment_set, joint_moment_estimates
from .errors import NoConvergence, TooShort, ValidationError, ZeroVariance
from .model import ModelParams, canonicalize, marginal_rep, stationary_phi
from .moments import MomentSet, marginal_autocorr, marginal_moment
from .simulate import ABC, RESTART, BivariateTrace, RngStream, _trace_kernel

PROB_FLOOR = 1e-6
NM_FATOL = 1e-10
NM_XATOL = 1e-8
NM_MAXITER = 2000
NM_INITIAL_STEP = 0.25
# polishing: the best few restarts are restarted in place until they stall
POLISH_CANDIDATES = 5
POLISH_ROUNDS = 30
POLISH_FATOL = 1e-16
POLISH_XATOL = 1e-10


@dataclass(frozen=True)
class Step1Result:
    a: float
    b: float
    gammas: tuple[float, float, float, float]  # (gamma_t1, gamma_t2, gamma_k1, gamma_k2)
    objective: float
    restarts_used: int

    def to_dict(self) -> dict:
        gt1, gt2, gk1, gk2 = self.gammas
        return {
            "a": self.a, "b": self.b,
            "gamma_t1": gt1, "gamma_t2": gt2, "gamma_k1": gk1, "gamma_k2": gk2,
            "delta0": self.objective, "restarts_used": self.restarts_used,
        }


@dataclass(frozen=True)
class AbcConfig:
    """Settings of the rejection-ABC step.

    ``distance`` selects the summary statistics: "three" uses
    (eta11, eta21, eta12); "four" adds eta22.
    """

    iterations: int = 10000
    acceptance_fraction: float = 0.01
    seed: int = 0
    distance: str = "three"
    threads: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if not 0.0 < self.acceptance_fraction <= 1.0:
            raise ValidationError("acceptance_fraction must lie in (0, 1]")
        if self.iterations * self.acceptance_fraction < 1.0:
            raise ValidationError("iterations * acceptance_fraction must be >= 1")
        if self.distance not in ("three", "four"):
            raise ValidationError("distance must be 'three' or 'four'")

    @property
    def n_accept(self) -> int:
        return max(1, int(round(self.iterations * self.acceptance_fraction)))


@dataclass(frozen=True, eq=False)
class FitResult:
    params: ModelParams
    step1: Step1Result
    accepted_draws: np.ndarray  # rows of (lambda3, omega3, distance), ascending distance
    target_moments: MomentSet
    config: AbcConfig = field(default_factory=AbcConfig)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "step1": self.step1.to_dict(),
            "summary": {
                "delta0": self.step1.objective,
                "accepted": int(self.accepted_draws.shape[0]),
                "iterations": self.config.iterations,
                "acceptance_fraction": self.config.acceptance_fraction,
                "distance": self.config.distance,
                "best_distance": float(self.accepted_draws[0, 2]),
                "worst_accepted_distance": float(self.accepted_draws[-1, 2]),
            },
            "target_moments": self.target_moments.to_dict(),
        }


# -- step 1: moment matching ---------------------------------------------------

def _marginal_targets(target: MomentSet) -> np.ndarray:
    return np.array([*target.muT, target.rhoT1, *target.muK, target.rhoK1], dtype=float)


def objective_delta0(candidate, target: MomentSet) -> float:
    """Squared relative moment misfit plus squared autocorrelation misfit of both marginals.

    ``candidate`` is (a, b, gamma_t1, gamma_t2, gamma_k1, gamma_k2).
    """
    a, b, gt1, gt2, gk1, gk2 = (float(x) for x in candidate)
    total = 0.0
    for (g1, g2), mus, rho_bar in (((gt1, gt2), target.muT, target.rhoT1),
                                   ((gk1, gk2), target.muK, target.rhoK1)):
        rep = marginal_rep(a, b, g1, g2)
        try:
            rho = marginal_autocorr(rep, 1)
        except ZeroVariance:
            rho = 0.0
        total += (rho - rho_bar) ** 2
        for r in (1, 2, 3):
            total += ((marginal_moment(rep, r) - mus[r - 1]) / mus[r - 1]) ** 2
    return total


@numba.njit(cache=True)
def _marginal_stats(a, b, g1, g2):
    # closed-form 2x2 versions of the marginal moment and autocorrelation formulas
    det = g1 * g2 * (1.0 - a * b)
    u11, u12, u21, u22 = g2 / det, g1 * a / det, g2 * b / det, g1 / det
    den = b * (1.0 - a) + a * (1.0 - b)
    p1, p2 = b * (1.0 - a) / den, a * (1.0 - b) / den
    v1a, v1b = p1 * u11 + p2 * u21, p1 * u12 + p2 * u22
    v2a, v2b = v1a * u11 + v1b * u21, v1a * u12 + v1b * u22
    v3a, v3b = v2a * u11 + v2b * u21, v2a * u12 + v2b * u22
    m1 = v1a + v1b
    m2 = 2.0 * (v2a + v2b)
    m3 = 6.0 * (v3a + v3b)
    d1a, d1b = g1 * (1.0 - a), g2 * (1.0 - b)
    # (phi U) P with P = U D1
    wa = (v1a * u11 + v1b * u21) * d1a
    wb = (v1a * u12 + v1b * u22) * d1b
    cross = wa * (u11 + u12) + wb * (u21 + u22)
    var = m2 - m1 * m1
    rho = (cross - m1 * m1) / var if var > 0.0 else 0.0
    return m1, m2, m3, rho


@numba.njit(cache=True)
def _delta0_natural(a, b, gt1, gt2, gk1, gk2, target):
    total = 0.0
    m1, m2, m3, rho = _marginal_stats(a, b, gt1, gt2)
    total += (rho - target[3]) ** 2
    total += ((m1 - target[0]) / target[0]) ** 2
    total += ((m2 - target[1]) / target[1]) ** 2
    total += ((m3 - target[2]) / target[2]) ** 2
    m1, m2, m3, rho = _marginal_stats(a, b, gk1, gk2)
    total += (rho - target[7]) ** 2
    total += ((m1 - target[4]) / target[4]) ** 2
    total += ((m2 - target[5]) / target[5]) ** 2
    total += ((m3 - target[6]) / target[6]) ** 2
    return total


@numba.njit(cache=True)
def _to_natural(z):
    out = np.empty(6)
    for i in range(2):
        p = 1.0 / (1.0 + math.exp(-min(max(z[i], -40.0), 40.0)))
        out[i] = min(max(p, PROB_FLOOR), 1.0 - PROB_FLOOR)
    for i in range(2, 6):
        out[i] = math.exp(min(max(z[i], -60.0), 60.0))
    return out


@numba.njit(cache=True)
def _delta0_unconstrained(z, target):
    x = _to_natural(z)
    f = _delta0_natural(x[0], x[1], x[2], x[3], x[4], x[5], target)
    if not math.isfinite(f):
        return np.inf
    return f


@numba.njit(cache=True)
def _nelder_mead(z0, target, step, fatol, xatol, maxiter):
    n = z0.shape[0]
    sim = np.empty((n + 1, n))
    fsim = np.empty(n + 1)
    sim[0] = z0
    for i in range(n):
        sim[i + 1] = z0
        sim[i + 1, i] += step
    for i in range(n + 1):
        fsim[i] = _delta0_unconstrained(sim[i], target)

    it = 0
    while it < maxiter:
        order = np.argsort(fsim)
        sim = sim[order]
        fsim = fsim[order]
        fspread = 0.0
        xspread = 0.0
        for i in range(1, n + 1):
            fspread = max(fspread, abs(fsim[i] - fsim[0]))
            for j in range(n):
                xspread = max(xspread, abs(sim[i, j] - sim[0, j]))
        if fspread <= fatol and xspread <= xatol:
            break
        it += 1

        centroid = np.zeros(n)
        for i in range(n):
            centroid += sim[i]
        centroid /= n
        xr = 2.0 * centroid - sim[n]
        fr = _delta0_unconstrained(xr, target)
        if fr < fsim[0]:
            xe = 3.0 * centroid - 2.0 * sim[n]
            fe = _delta0_unconstrained(xe, target)
            if fe < fr:
                sim[n] = xe
                fsim[n] = fe
            else:
                sim[n] = xr
                fsim[n] = fr
        elif fr < fsim[n - 1]:
            sim[n] = xr
            fsim[n] = fr
        else:
            if fr < fsim[n]:
                xc = 1.5 * centroid - 0.5 * sim[n]
                fc = _delta0_unconstrained(xc, target)
                accept = fc <= fr
            else:
                xc = 0.5 * centroid + 0.5 * sim[n]
                fc = _delta0_unconstrained(xc, target)
                accept = fc < fsim[n]
            if accept:
                sim[n] = xc
                fsim[n] = fc
            else:
                for i in range(1, n + 1):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fsim[i] = _delta0_unconstrained(sim[i], target)
    best = int(np.argmin(fsim))
    return sim[best].copy(), fsim[best], it


def _starting_point(target: MomentSet, stream: RngStream) -> np.ndarray:
    gen = stream.generator()
    a0, b0 = gen.uniform(0.001, 0.999, size=2)
    scale_t, scale_k = 1.0 / target.muT[0], 1.0 / target.muK[0]
    log_gammas = gen.uniform(np.log(0.1), np.log(10.0), size=4) + np.log([scale_t, scale_t, scale_k, scale_k])
    return np.array([math.log(a0 / (1 - a0)), math.log(b0 / (1 - b0)), *log_gammas])


def _canonical_step1(x: np.ndarray) -> np.ndarray:
    a, b, gt1, gt2, gk1, gk2 = x
    swapped = np.array([b, a, gt2, gt1, gk2, gk1])
    key = (gt1 - gt2, gk1 - gk2, b - a)
    return x if key >= tuple(-v for v in key) else swapped


def _polish(z, f, tgt):
    # a fresh simplex around the incumbent escapes premature collapse in flat valleys
    for _ in range(POLISH_ROUNDS):
        z2, f2, _ = _nelder_mead(z, tgt, NM_INITIAL_STEP, POLISH_FATOL, POLISH_XATOL, NM_MAXITER)
        improved = f2 < f * (1.0 - 1e-6)
        if f2 < f:
            z, f = z2, f2
        if not improved:
            break
    return z, f


def fit_step1(target: MomentSet, restarts: int = 100, seed: int = 0) -> Step1Result:
    """Multi-start Nelder-Mead for (a, b, gamma_t1, gamma_t2, gamma_k1, gamma_k2).

    Each restart searches in logit/log coordinates, so the box constraints
    hold by construction. The best few restarts are then polished by
    restarting the simplex in place; the best polished point wins and its
    labels are canonicalised.
    """
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    if target.muT[0] <= 0.0 or target.muK[0] <= 0.0:
        raise ValidationError("target first moments must be positive")
    tgt = _marginal_targets(target)
    runs = []
    for i in range(restarts):
        z0 = _starting_point(target, RngStream(seed, i, RESTART))
        z, f, _ = _nelder_mead(z0, tgt, NM_INITIAL_STEP, NM_FATOL, NM_XATOL, NM_MAXITER)
        if math.isfinite(f):
            runs.append((f, i, z))
    if not runs:
        raise NoConvergence("no restart reached a finite objective")
    runs.sort(key=lambda r: (r[0], r[1]))
    polished = [_polish(z, f, tgt) + (i,) for f, i, z in runs[:POLISH_CANDIDATES]]
    best_z, best_f, _ = min(polished, key=lambda r: (r[1], r[2]))
    x = _canonical_step1(_to_natural(best_z))
    return Step1Result(float(x[0]), float(x[1]), tuple(float(v) for v in x[2:]), float(best_f), restarts)


# -- step 2: ABC ----------------------------------------------------------------

def _abc_block(indices, step1: Step1Result, n: int, observed: np.ndarray, cfg: AbcConfig):
    gt1, gt2, gk1, gk2 = step1.gammas
    upper_l3, upper_w3 = min(gt1, gk1), min(gt2, gk2)
    switch = np.array([step1.a, step1.b])
    phi1 = float(stationary_phi(step1.a, step1.b)[0])
    four = cfg.distance == "four"
    out = np.empty((len(indices), 3))
    for row, i in enumerate(indices):
        gen = RngStream(cfg.seed, int(i), ABC).generator()
        l3 = gen.uniform(0.0, upper_l3)
        w3 = gen.uniform(0.0, upper_w3)
        rates = np.array([gt1 - l3, gk1 - l3, l3, gt2 - w3, gk2 - w3, w3])
        t, k, _ = _trace_kernel(gen, n, rates, switch, phi1)
        sim = joint_moment_estimates(t, k, four)
        out[row] = (l3, w3, float(np.sum(((sim - observed) / observed) ** 2)))
    return out


def abc_draws(trace: BivariateTrace, step1: Step1Result, cfg: AbcConfig) -> np.ndarray:
    """All (lambda3, omega3, distance) draws, in iteration order."""
    observed = joint_moment_estimates(trace.t, trace.k, cfg.distance == "four")
    blocks = np.array_split(np.arange(cfg.iterations), max(1, cfg.threads) * 4)
    blocks = [b for b in blocks if b.size]
    if cfg.threads <= 1:
        parts = [_abc_block(b, step1, len(trace), observed, cfg) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda b: _abc_block(b, step1, len(trace), observed, cfg), blocks))
    return np.concatenate(parts)


def select_accepted(draws: np.ndarray, n_accept: int) -> np.ndarray:
    """The ``n_accept`` draws with smallest distance; ties keep iteration order."""
    order = np.argsort(draws[:, 2], kind="stable")
    return draws[order[:n_accept]]


def params_from_step1(step1: Step1Result, lambda3: float, omega3: float) -> ModelParams:
    gt1, gt2, gk1, gk2 = step1.gammas
    return ModelParams(step1.a, step1.b, (gt1 - lambda3, gk1 - lambda3, lambda3),
                       (gt2 - omega3, gk2 - omega3, omega3))


def fit_step2_abc(trace: BivariateTrace, step1: Step1Result, cfg: AbcConfig,
                  target: MomentSet | None = None) -> FitResult:
    """Rejection ABC over (lambda3, omega3) with uniform priors bounded by Step 1's rates.

    Every draw simulates a trace as long as the observed one; the closest
    fraction by relative joint-moment distance is kept and averaged.
    """
    if len(trace) < 3:
        raise TooShort("a trace needs at least 3 pairs")
    draws = abc_draws(trace, step1, cfg)
    accepted = select_accepted(draws, cfg.n_accept)
    l3, w3 = float(accepted[:, 0].mean()), float(accepted[:, 1].mean())
    params = canonicalize(params_from_step1(step1, l3, w3))
    if target is None:
        target = empirical_moment_set(trace)
    return FitResult(params, step1, accepted, target, cfg)


def fit_pipeline(trace: BivariateTrace, restarts: int = 100, cfg: AbcConfig | None = None) -> FitResult:
    """Empirical moments, then Step 1, then Step 2; one seed drives both steps."""
    cfg = cfg or AbcConfig()
    if len(trace) < 3:
        raise TooShort("a trace needs at least 3 pairs")
    target = empirical_moment_set(trace)
    step1 = fit_step1(target, restarts, cfg.seed)
    return fit_step2_abc(trace, step1, cfg, target)
