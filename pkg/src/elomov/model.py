"""Adjacent-categories model of the discretized margin of victory.

Probabilities follow a base-10 multinomial logistic form

    P_h(z) ∝ 10 ** (alpha[h] + delta[h] * z / sigma),   h = 0..J

where ``z`` is the home-minus-away rating difference.  Log-likelihoods are
reported in natural log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LN10 = math.log(10.0)
DEFAULT_SIGMA = 400.0

# Tolerances for the structural checks on coefficients.
SYMMETRY_TOL = 1e-9
ORDINAL_TOL = 1e-9


@dataclass(frozen=True)
class DiscretizationScheme:
    """Maps a signed point difference ``d`` to an ordinal category ``0..J``.

    ``thresholds`` are the positive cut points: for ``thresholds=(2,)`` the
    home-win categories are ``0 < d <= 2`` and ``d > 2``.  Away wins mirror
    them and ``d == 0`` is always the draw category ``J // 2``.
    """

    thresholds: tuple[int, ...] = ()

    def __post_init__(self):
        ts = tuple(int(t) for t in self.thresholds)
        if any(t < 1 for t in ts):
            raise ValueError(f"thresholds must be >= 1, got {ts}")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {ts}")
        object.__setattr__(self, "thresholds", ts)

    @property
    def J(self) -> int:
        return 2 * (len(self.thresholds) + 1)

    @property
    def draw(self) -> int:
        return self.J // 2

    @classmethod
    def parse(cls, text: str) -> DiscretizationScheme:
        """Parse ``"J:t1,t2,..."`` (``"2"`` or ``"2:"`` for the ternary scheme)."""
        head, _, tail = text.strip().partition(":")
        thresholds = tuple(int(t) for t in tail.split(",") if t.strip())
        scheme = cls(thresholds)
        if int(head) != scheme.J:
            raise ValueError(
                f"scheme {text!r}: J={head} inconsistent with {len(thresholds)} "
                f"threshold(s) (expected J={scheme.J})"
            )
        return scheme

    def __str__(self):
        if not self.thresholds:
            return str(self.J)
        return f"{self.J}:" + ",".join(str(t) for t in self.thresholds)

    def discretize(self, d: int) -> int:
        if d == 0:
            return self.draw
        if d < 0:
            return self.J - self.discretize(-d)
        above = sum(1 for t in self.thresholds if d > t)
        return self.draw + 1 + above

    def representative(self, category: int) -> int:
        """Smallest-magnitude point difference falling in ``category``."""
        if not 0 <= category <= self.J:
            raise ValueError(f"category {category} outside 0..{self.J}")
        if category == self.draw:
            return 0
        if category < self.draw:
            return -self.representative(self.J - category)
        k = category - self.draw - 1
        return 1 if k == 0 else self.thresholds[k - 1] + 1


def discretize(d: int, scheme: DiscretizationScheme) -> int:
    return scheme.discretize(int(d))


def _readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelCoefficients:
    """Coefficients of the adjacent-categories model.

    Invariants checked on construction: ``alpha`` symmetric with
    ``alpha[0] == alpha[J] == 0``, ``delta`` antisymmetric with
    ``delta[J] == 1``, ``delta`` strictly increasing, ``sigma > 0``.
    ``eta`` is the home-field advantage in units of ``sigma``.
    """

    alpha: np.ndarray
    delta: np.ndarray
    eta: float = 0.0
    sigma: float = DEFAULT_SIGMA
    scores: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = _readonly(self.alpha, "alpha")
        delta = _readonly(self.delta, "delta")
        if alpha.shape != delta.shape or alpha.size < 2:
            raise ValueError("alpha and delta must have equal length J+1 >= 2")
        if not (math.isfinite(self.eta) and math.isfinite(self.sigma)):
            raise ValueError("eta and sigma must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if np.max(np.abs(alpha - alpha[::-1])) > SYMMETRY_TOL:
            raise ValueError("alpha must satisfy alpha[h] == alpha[J-h]")
        if abs(alpha[0]) > SYMMETRY_TOL:
            raise ValueError("alpha must be pinned to alpha[0] == alpha[J] == 0")
        if np.max(np.abs(delta + delta[::-1])) > SYMMETRY_TOL:
            raise ValueError("delta must satisfy delta[h] == -delta[J-h]")
        if abs(delta[-1] - 1.0) > SYMMETRY_TOL:
            raise ValueError("delta must be pinned to delta[J] == -delta[0] == 1")
        if np.any(np.diff(delta) <= ORDINAL_TOL):
            raise ValueError("delta must be strictly increasing (ordinal categories)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "sigma", float(self.sigma))
        scores = (delta - delta[0]) / 2.0
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def J(self) -> int:
        return self.alpha.size - 1

    @property
    def kappa(self) -> float | None:
        """Davidson draw parameter, defined for the ternary model only."""
        return 10.0 ** self.alpha[1] if self.J == 2 else None

    @property
    def score_map(self) -> ScoreMap:
        return ScoreMap(self.scores)

    @classmethod
    def elo(cls, sigma: float = DEFAULT_SIGMA, eta: float = 0.0) -> ModelCoefficients:
        """Binary (J=1) Bradley-Terry model."""
        return cls([0.0, 0.0], [-1.0, 1.0], eta, sigma)

    @classmethod
    def davidson(cls, kappa: float, eta: float = 0.0,
                 sigma: float = DEFAULT_SIGMA) -> ModelCoefficients:
        """Ternary (J=2) model with draw parameter ``kappa``."""
        a1 = math.log10(kappa)
        return cls([0.0, a1, 0.0], [-1.0, 0.0, 1.0], eta, sigma)

    @classmethod
    def from_half(cls, alpha_half: Sequence[float], delta_half: Sequence[float],
                  J: int, eta: float = 0.0,
                  sigma: float = DEFAULT_SIGMA) -> ModelCoefficients:
        """Build from the J-1 free values.

        ``alpha_half`` holds ``alpha[1..J//2]`` and ``delta_half`` holds
        ``delta[1..ceil(J/2)-1]``; the rest follows from symmetry and pins.
        """
        alpha = np.zeros(J + 1)
        delta = np.zeros(J + 1)
        na, nd = J // 2, (J + 1) // 2 - 1
        if len(alpha_half) != na or len(delta_half) != nd:
            raise ValueError(f"J={J} needs {na} alpha and {nd} delta values")
        alpha[1:na + 1] = alpha_half
        alpha[J - na:J] = alpha[1:na + 1][::-1]
        delta[0] = -1.0
        delta[1:nd + 1] = delta_half
        delta[J - nd:] = -delta[:nd + 1][::-1]
        return cls(alpha, delta, eta, sigma)

    @classmethod
    def from_scores(cls, alpha: Sequence[float], scores: Sequence[float],
                    eta: float = 0.0, sigma: float = DEFAULT_SIGMA) -> ModelCoefficients:
        return cls(alpha, 2.0 * np.asarray(scores, dtype=float) - 1.0, eta, sigma)

    def replace(self, **changes) -> ModelCoefficients:
        kw = dict(alpha=self.alpha, delta=self.delta, eta=self.eta, sigma=self.sigma)
        kw.update(changes)
        return ModelCoefficients(**kw)

    def isclose(self, other: ModelCoefficients, atol: float = 1e-9) -> bool:
        return (
            self.J == other.J
            and np.allclose(self.alpha, other.alpha, rtol=0, atol=atol)
            and np.allclose(self.delta, other.delta, rtol=0, atol=atol)
            and abs(self.eta - other.eta) <= atol
            and abs(self.sigma - other.sigma) <= atol * max(1.0, self.sigma)
        )

    def to_dict(self) -> dict:
        out = {
            "J": self.J,
            "alpha": self.alpha.tolist(),
            "delta": self.delta.tolist(),
            "scores": self.scores.tolist(),
            "eta": self.eta,
            "sigma": self.sigma,
        }
        if self.J == 2:
            out["kappa"] = self.kappa
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ModelCoefficients:
        return cls(data["alpha"], data["delta"], data.get("eta", 0.0),
                   data.get("sigma", DEFAULT_SIGMA))


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Score set ``(0, s_1, ..., s_{J-1}, 1)`` assigned to the home team."""

    scores: np.ndarray

    def __post_init__(self):
        s = _readonly(self.scores, "scores")
        if abs(s[0]) > SYMMETRY_TOL or abs(s[-1] - 1.0) > SYMMETRY_TOL:
            raise ValueError("score set must start at 0 and end at 1")
        if np.any(np.diff(s) <= 0):
            raise ValueError("scores must be strictly increasing")
        if np.max(np.abs(s + s[::-1] - 1.0)) > SYMMETRY_TOL:
            raise ValueError("scores must satisfy s[J-h] == 1 - s[h]")
        object.__setattr__(self, "scores", s)

    def __getitem__(self, h):
        return self.scores[h]

    def __len__(self):
        return self.scores.size


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("rating difference must be finite")
    return z


def _check_category(y, J: int) -> int:
    if isinstance(y, (bool, np.bool_)) or int(y) != y or not 0 <= y <= J:
        raise ValueError(f"category {y!r} outside 0..{J}")
    return int(y)


def log10_weights(alpha, delta, x):
    """Unnormalized base-10 exponents ``alpha + delta * x`` (broadcast over x)."""
    x = np.asarray(x)
    x = x.astype(np.result_type(x, float), copy=False)
    return np.asarray(alpha) + np.multiply.outer(x, np.asarray(delta))


def log_probs(alpha, delta, x) -> np.ndarray:
    """Natural-log category probabilities at normalized difference ``x``.

    No structural checks, so it also serves offset-invariance tests.
    """
    e = LN10 * log10_weights(alpha, delta, x)
    top = e.argmax(axis=-1)[..., None]
    m = np.take_along_axis(e, top, axis=-1)
    w = np.exp(e - m)
    # log1p over the non-maximal terms keeps precision when one category dominates
    np.put_along_axis(w, top, 0.0, axis=-1)
    return e - m - np.log1p(w.sum(axis=-1, keepdims=True))


def _normalized(z, coeffs: ModelCoefficients, include_hfa: bool):
    x = _check_z(z) / coeffs.sigma
    return x + coeffs.eta if include_hfa else x


def category_probs(z, coeffs: ModelCoefficients, include_hfa: bool = False) -> np.ndarray:
    """Probabilities of categories ``0..J`` at rating difference ``z``.

    With ``include_hfa`` the model is evaluated at ``z + eta * sigma``.
    Array ``z`` gives an array of shape ``z.shape + (J+1,)``.
    """
    x = _normalized(z, coeffs, include_hfa)
    e = LN10 * log10_weights(coeffs.alpha, coeffs.delta, x)
    e -= e.max(axis=-1, keepdims=True)
    p = np.exp(e)
    return p / p.sum(axis=-1, keepdims=True)


def expected_score(z, coeffs: ModelCoefficients, include_hfa: bool = False):
    """Expected home score ``G``: the score-weighted category probability."""
    g = category_probs(z, coeffs, include_hfa) @ coeffs.scores
    return float(g) if np.ndim(g) == 0 else g


def log_likelihood(y: int, z: float, coeffs: ModelCoefficients,
                   include_hfa: bool = False) -> float:
    y = _check_category(y, coeffs.J)
    x = _normalized(z, coeffs, include_hfa)
    return float(log_probs(coeffs.alpha, coeffs.delta, x)[..., y])


def grad_z(y: int, z: float, coeffs: ModelCoefficients,
           include_hfa: bool = False) -> float:
    """Derivative of :func:`log_likelihood` with respect to ``z``."""
    y = _check_category(y, coeffs.J)
    p = category_probs(z, coeffs, include_hfa)
    # equals scores[y] - G(z) without cancellation when P_y is near one
    gap = p @ (coeffs.scores[y] - coeffs.scores)
    return float(2.0 * LN10 / coeffs.sigma * gap)
