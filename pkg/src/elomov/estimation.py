"""Estimating model coefficients from historical results.

Two routes: a closed form from category frequencies, which is exact when
all teams are equally strong, and joint maximum likelihood with constant
per-season skills.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from elomov.data import SeasonDataset
from elomov.engine import EngineConfig, run_season
from elomov.errors import (
    DegenerateHFAError,
    EstimationError,
    NonMonotoneDeltaError,
    ZeroFrequencyError,
)
from elomov.evaluation import EvalConfig, average_log_score
from elomov.model import (
    DEFAULT_SIGMA,
    LN10,
    ORDINAL_TOL,
    DiscretizationScheme,
    ModelCoefficients,
)

log = logging.getLogger(__name__)

HFA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    f: np.ndarray
    n_games: int
    scheme: DiscretizationScheme | None = None

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if np.any(f < 0) or abs(f.sum() - 1.0) > 1e-9:
            raise ValueError("frequencies must be nonnegative and sum to 1")
        if self.n_games <= 0:
            raise ValueError("n_games must be positive")
        if self.scheme is not None and f.size != self.scheme.J + 1:
            raise ValueError("frequency vector length does not match the scheme")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def J(self) -> int:
        return self.f.size - 1

    def ternary(self) -> tuple[float, float, float]:
        """(f_H, f_D, f_A) for an even-J table."""
        mid = self.J // 2
        return float(self.f[mid + 1:].sum()), float(self.f[mid]), float(self.f[:mid].sum())


def category_counts(seasons: Sequence[SeasonDataset],
                    scheme: DiscretizationScheme) -> np.ndarray:
    counts = np.zeros(scheme.J + 1, dtype=int)
    for season in seasons:
        for m in season.matches:
            y = m.category if m.category is not None else scheme.discretize(m.d)
            counts[y] += 1
    return counts


def count_frequencies(seasons: Sequence[SeasonDataset], scheme: DiscretizationScheme,
                      smoothing: float = 0.0) -> FrequencyTable:
    """Relative category frequencies, optionally with additive smoothing."""
    counts = category_counts(seasons, scheme)
    n = int(counts.sum())
    if n == 0:
        raise EstimationError("no games to count")
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    f = (counts + smoothing) / (n + smoothing * (scheme.J + 1))
    return FrequencyTable(f, n, scheme)


def closed_form_coefficients(freq: FrequencyTable | Sequence[float],
                             sigma: float = DEFAULT_SIGMA) -> ModelCoefficients:
    """Coefficients matching the frequencies at zero skill difference.

    With ``xi = sqrt(f_0 f_J)``: ``eta = log10(f_J/f_0)/2``,
    ``alpha_h = log10(f_h f_{J-h})/2 - log10(xi)`` and
    ``delta_h = log10(f_h/f_{J-h}) / (2 eta)``.  Works for odd J too.
    """
    f = freq.f if isinstance(freq, FrequencyTable) else np.asarray(freq, dtype=float)
    J = f.size - 1
    zero = [h for h in range(J + 1) if not f[h] > 0]
    if zero:
        raise ZeroFrequencyError(zero)
    if abs(f[J] - f[0]) <= HFA_TOL:
        raise DegenerateHFAError(
            f"f_0 == f_J ({f[0]:.6g}): home-field advantage is zero and "
            "delta is undetermined"
        )
    lf = np.log10(f)
    log_xi = 0.5 * (lf[0] + lf[J])
    eta = 0.5 * (lf[J] - lf[0])
    alpha = 0.5 * (lf + lf[::-1]) - log_xi
    delta = (lf - lf[::-1]) / (2.0 * eta)
    # exact pins; the formulas give them up to rounding
    alpha[0] = alpha[J] = 0.0
    delta[0], delta[J] = -1.0, 1.0
    if J % 2 == 0:
        delta[J // 2] = 0.0
    if np.any(np.diff(delta) <= ORDINAL_TOL):
        raise NonMonotoneDeltaError(
            f"frequencies imply non-increasing delta {np.round(delta, 4).tolist()}"
        )
    return ModelCoefficients(alpha, delta, eta, sigma)


@dataclass(frozen=True)
class FitConfig:
    tolerance: float = 1e-6
    max_iterations: int = 10_000
    smoothing: float = 0.0
    init: str = "freq"
    k_lo: float = 0.01
    k_hi: float = 0.5
    k_step: float = 0.01

    def __post_init__(self):
        if self.init not in ("freq", "zero"):
            raise ValueError(f"init must be 'freq' or 'zero', got {self.init!r}")
        if not (0 < self.k_lo <= self.k_hi and self.k_step > 0):
            raise ValueError("K grid needs 0 < lo <= hi and step > 0")

    def k_grid(self) -> list[float]:
        n = int(math.floor((self.k_hi - self.k_lo) / self.k_step + 1e-9)) + 1
        return [round(self.k_lo + i * self.k_step, 12) for i in range(n)]


@dataclass
class FitReport:
    coefficients: ModelCoefficients
    per_season_skills: list[dict[str, float]]
    final_log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    history: list[float] = field(default_factory=list)


class _Problem:
    """Joint log-likelihood over per-season skills and free coefficients.

    Vector layout: skills of every season (in units of sigma), then
    ``alpha[1..J//2]``, then the free gap logits, then eta.  The delta
    gaps are a softmax of the logits (last one pinned to zero), which keeps
    delta strictly increasing with ``delta[0] = -1`` and ``delta[J] = 1``.
    """

    def __init__(self, seasons, scheme: DiscretizationScheme):
        self.J = J = scheme.J
        self.n_alpha = J // 2
        self.n_gaps = (J + 1) // 2
        self.teams, home, away, ys = [], [], [], []
        offset = 0
        for season in seasons:
            names = sorted(season.teams)
            index = {n: offset + i for i, n in enumerate(names)}
            self.teams.append((offset, names))
            for m in season.matches:
                home.append(index[m.home])
                away.append(index[m.away])
                ys.append(m.category if m.category is not None else scheme.discretize(m.d))
            offset += len(names)
        self.n_skills = offset
        self.home = np.array(home, dtype=int)
        self.away = np.array(away, dtype=int)
        self.y = np.array(ys, dtype=int)
        self.onehot = np.eye(J + 1)[self.y]
        self.size = self.n_skills + self.n_alpha + self.n_gaps - 1 + 1

    def unpack(self, v):
        s = self.n_skills
        u = v[:s]
        alpha_half = v[s:s + self.n_alpha]
        logits = np.append(v[s + self.n_alpha:-1], 0.0)
        eta = v[-1]
        g = np.exp(logits - logits.max())
        g /= g.sum()
        return u, alpha_half, g, eta

    def coefficients(self, v):
        _, alpha_half, g, eta = self.unpack(v)
        alpha, delta = self._full(alpha_half, g)
        return alpha, delta, eta

    def _full(self, alpha_half, g):
        J = self.J
        alpha = np.zeros(J + 1)
        alpha[1:self.n_alpha + 1] = alpha_half
        alpha[J - self.n_alpha:J] = alpha[1:self.n_alpha + 1][::-1]
        delta = np.zeros(J + 1)
        delta[:self.n_gaps] = -1.0 + np.concatenate([[0.0], np.cumsum(g)[:-1]])
        delta[J - self.n_gaps + 1:] = -delta[:self.n_gaps][::-1]
        return alpha, delta

    def pack(self, u, alpha_half, delta_half, eta):
        gaps = np.diff(np.concatenate([[-1.0], delta_half, [0.0]]))
        logits = np.log(gaps) - np.log(gaps[-1])
        return np.concatenate([u, alpha_half, logits[:-1], [eta]])

    def value_and_grad(self, v):
        u, alpha_half, g, eta = self.unpack(v)
        alpha, delta = self._full(alpha_half, g)
        x = u[self.home] - u[self.away] + eta
        e = LN10 * (alpha + np.multiply.outer(x, delta))
        m = e.max(axis=1, keepdims=True)
        w = np.exp(e - m)
        z = w.sum(axis=1, keepdims=True)
        logp = e - m - np.log(z)
        value = float((logp * self.onehot).sum())

        r = self.onehot - w / z
        d_alpha = LN10 * r.sum(axis=0)
        d_delta = LN10 * (x[:, None] * r).sum(axis=0)
        dx = LN10 * (r @ delta)

        grad = np.zeros_like(v)
        np.add.at(grad, self.home, dx)
        np.subtract.at(grad, self.away, dx)
        s = self.n_skills
        J = self.J
        ks = np.arange(1, self.n_alpha + 1)
        da = d_alpha[ks] + d_alpha[J - ks]
        if J % 2 == 0:
            da[-1] = d_alpha[J // 2]
        grad[s:s + self.n_alpha] = da

        # delta[k] = -1 + sum_{i<k} g_i for k < n_gaps, mirrored above
        kd = np.arange(1, self.n_gaps)
        dd_half = d_delta[kd] - d_delta[J - kd]
        c = np.cumsum(g)
        dlog = np.zeros(self.n_gaps)
        for k, dk in zip(kd, dd_half):
            dlog += dk * g * ((np.arange(self.n_gaps) < k) - c[k - 1])
        grad[s + self.n_alpha:-1] = dlog[:-1]
        grad[-1] = dx.sum()
        return value, grad

    def center(self, v):
        v = v.copy()
        for offset, names in self.teams:
            sl = slice(offset, offset + len(names))
            v[sl] -= v[sl].mean()
        return v


def _initial_vector(problem: _Problem, seasons, scheme, config: FitConfig):
    u = np.zeros(problem.n_skills)
    if config.init == "freq":
        try:
            c = closed_form_coefficients(count_frequencies(seasons, scheme, config.smoothing))
            return problem.pack(u, c.alpha[1:problem.n_alpha + 1],
                                c.delta[1:problem.n_gaps], c.eta)
        except EstimationError as exc:
            log.warning("frequency initialization failed (%s); starting from zero", exc)
    # equal gaps, zero alpha, no home advantage
    return np.zeros(problem.size)


def ml_fit(seasons: Sequence[SeasonDataset], scheme: DiscretizationScheme,
           config: FitConfig = FitConfig(), sigma: float = DEFAULT_SIGMA) -> FitReport:
    """Maximize the joint likelihood over coefficients and per-season skills.

    Uses L-BFGS on the unconstrained reparameterization.  Skills are
    constant within a season and centered to mean zero.
    """
    if not seasons or not any(len(s) for s in seasons):
        raise EstimationError("no games to fit")
    problem = _Problem(seasons, scheme)
    v0 = _initial_vector(problem, seasons, scheme, config)

    history = []

    def objective(v):
        value, grad = problem.value_and_grad(v)
        return -value, -grad

    def record(v):
        history.append(problem.value_and_grad(v)[0])

    history.append(problem.value_and_grad(v0)[0])
    with np.errstate(over="ignore", under="ignore"):
        result = minimize(
            objective, v0, jac=True, method="L-BFGS-B", callback=record,
            options={"maxiter": config.max_iterations, "gtol": config.tolerance,
                     "ftol": 0.0, "maxcor": 20, "maxls": 50},
        )
    v = problem.center(result.x)
    value, grad = problem.value_and_grad(v)
    gnorm = float(np.max(np.abs(grad)))
    converged = gnorm < config.tolerance
    if not converged:
        log.warning("ml_fit stopped after %d iterations with gradient %.3g (%s)",
                    result.nit, gnorm, result.message)

    alpha, delta, eta = problem.coefficients(v)
    if np.any(np.diff(delta) <= ORDINAL_TOL):
        raise NonMonotoneDeltaError(
            f"fit drove delta to the ordinal boundary: {np.round(delta, 6).tolist()}"
        )
    coeffs = ModelCoefficients(alpha, delta, eta, sigma)
    skills = [
        {n: float(v[offset + i]) * sigma for i, n in enumerate(names)}
        for offset, names in problem.teams
    ]
    return FitReport(coeffs, skills, value, int(result.nit), converged, gnorm, history)


def sweep_step(seasons: Sequence[SeasonDataset], coeffs: ModelCoefficients,
               grid: Sequence[float], scheme: DiscretizationScheme,
               tau_fraction: float = 0.5, apply_hfa: bool = True):
    """Rate every season for each step size and score it.

    Returns ``(best_k, [(k, average_log_score), ...])``; skills restart
    from zero in every season.
    """
    grid = list(grid)
    if not grid or any(not k > 0 for k in grid):
        raise ValueError("grid must be a nonempty list of positive step sizes")
    eval_config = EvalConfig(tau_fraction)
    curve = []
    for k in grid:
        config = EngineConfig(k, coeffs, apply_hfa)
        runs = [run_season(s, scheme, config) for s in seasons]
        curve.append((k, average_log_score(runs, eval_config)))
    best = min(curve, key=lambda kv: kv[1])[0]
    return best, curve
