"""Synthetic leagues drawn from the adjacent-categories model."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from elomov.data import MatchRecord, SeasonDataset
from elomov.model import DiscretizationScheme, ModelCoefficients, category_probs

RNG_ALGORITHM = "numpy.PCG64"


@dataclass(frozen=True, eq=False)
class SimSpec:
    coefficients: ModelCoefficients
    scheme: DiscretizationScheme
    true_skills: tuple[float, ...]
    rounds: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "true_skills", tuple(float(s) for s in self.true_skills))
        if len(self.true_skills) < 2:
            raise ValueError("need at least two teams")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if self.scheme.J != self.coefficients.J:
            raise ValueError("scheme and coefficients disagree on J")


def sample_outcomes(z, coeffs: ModelCoefficients, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of categories at rating differences ``z`` (HFA applied)."""
    cdf = np.cumsum(category_probs(np.atleast_1d(z), coeffs, include_hfa=True), axis=-1)
    u = rng.random(cdf.shape[0])
    return np.minimum((u[:, None] >= cdf).sum(axis=-1), coeffs.J)


def sample_outcome(home_skill: float, away_skill: float, coeffs: ModelCoefficients,
                   rng: np.random.Generator) -> int:
    return int(sample_outcomes(home_skill - away_skill, coeffs, rng)[0])


def schedule(n_teams: int, rounds: int, rng: np.random.Generator) -> np.ndarray:
    """``rounds`` double round-robins, each shuffled independently."""
    pairs = np.array([(i, j) for i in range(n_teams) for j in range(n_teams) if i != j])
    return np.concatenate([pairs[rng.permutation(len(pairs))] for _ in range(rounds)])


def team_names(n: int) -> list[str]:
    width = len(str(n))
    return [f"T{i + 1:0{width}d}" for i in range(n)]


def simulate_games(spec: SimSpec) -> tuple[np.ndarray, np.ndarray]:
    """Schedule ``(n, 2)`` of team indices and the sampled categories."""
    rng = np.random.default_rng(spec.seed)
    skills = np.asarray(spec.true_skills)
    games = schedule(len(skills), spec.rounds, rng)
    z = skills[games[:, 0]] - skills[games[:, 1]]
    return games, sample_outcomes(z, spec.coefficients, rng)


def generate_league(spec: SimSpec, label: str = "sim") -> SeasonDataset:
    """One synthetic season; identical specs give identical seasons.

    Each category is stored as its smallest-magnitude point difference.
    """
    skills = np.asarray(spec.true_skills)
    games, ys = simulate_games(spec)
    names = team_names(len(skills))
    per_round = len(skills) * (len(skills) - 1)
    start = date(2000, 1, 1)
    matches = []
    for t, ((i, j), y) in enumerate(zip(games, ys)):
        d = spec.scheme.representative(int(y))
        matches.append(MatchRecord(
            t, names[i], names[j], max(d, 0), max(-d, 0),
            date=start + timedelta(days=t // per_round),
        ))
    meta = {
        "rng": RNG_ALGORITHM,
        "seed": spec.seed,
        "scheme": str(spec.scheme),
        "rounds": spec.rounds,
        "true_skills": dict(zip(names, skills.tolist())),
        "coefficients": spec.coefficients.to_dict(),
    }
    return SeasonDataset(label, tuple(matches), meta)


def spread_skills(n_teams: int, spread: float) -> np.ndarray:
    """Evenly spaced skills covering ``[-spread/2, spread/2]``."""
    return np.linspace(-spread / 2, spread / 2, n_teams)
