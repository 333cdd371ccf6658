"""Online Elo-MOV rating updates."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, TextIO

from elomov.data import SeasonDataset
from elomov.errors import DataError
from elomov.evaluation import merge_ternary
from elomov.model import DiscretizationScheme, ModelCoefficients, category_probs


@dataclass
class SkillTable:
    """Current ratings; unseen teams enter at ``theta_init``."""

    skills: dict[str, float] = field(default_factory=dict)
    theta_init: float = 0.0

    def __getitem__(self, team: str) -> float:
        return self.skills.get(team, self.theta_init)

    def __contains__(self, team: str) -> bool:
        return team in self.skills

    def ensure(self, team: str) -> float:
        return self.skills.setdefault(team, self.theta_init)

    def copy(self) -> SkillTable:
        return SkillTable(dict(self.skills), self.theta_init)

    def total(self) -> float:
        return sum(self.skills.values())

    def normalized(self, sigma: float) -> dict[str, float]:
        return {k: v / sigma for k, v in self.skills.items()}

    def ranking(self) -> list[tuple[str, float]]:
        return sorted(self.skills.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class EngineConfig:
    k_tilde: float
    coefficients: ModelCoefficients
    apply_hfa: bool = True
    batch_simultaneous: bool = False

    def __post_init__(self):
        if not self.k_tilde > 0:
            raise ValueError(f"k_tilde must be positive, got {self.k_tilde}")

    @property
    def k(self) -> float:
        """Classical Elo step ``K = k_tilde * sigma``."""
        return self.k_tilde * self.coefficients.sigma


@dataclass(frozen=True)
class RatingStep:
    t: int
    home: str
    away: str
    d: int
    y: int
    z: float
    expected: float
    delta: float
    theta_home_after: float
    theta_away_after: float
    probs: tuple[float, float, float] | None
    outcome: str


@dataclass
class SeasonRun:
    label: str
    steps: list[RatingStep]
    initial: SkillTable
    final: SkillTable


def _predict(z: float, config: EngineConfig):
    coeffs = config.coefficients
    p = category_probs(z, coeffs, include_hfa=config.apply_hfa)
    g = float(p @ coeffs.scores)
    ternary = merge_ternary(p) if coeffs.J % 2 == 0 else None
    return g, ternary


def _check_pair(home: str, away: str, y: int, J: int) -> None:
    if home == away:
        raise ValueError(f"team {home!r} cannot play itself")
    if not 0 <= y <= J:
        raise ValueError(f"category {y} outside 0..{J}")


def update_pair(table: SkillTable, home: str, away: str, y: int,
                config: EngineConfig) -> float:
    """Apply one game to ``table`` in place; return the home rating change."""
    coeffs = config.coefficients
    _check_pair(home, away, y, coeffs.J)
    z = table.ensure(home) - table.ensure(away)
    g, _ = _predict(z, config)
    change = config.k * (coeffs.scores[y] - g)
    table.skills[home] += change
    table.skills[away] -= change
    return change


def _category(match, scheme: DiscretizationScheme) -> int:
    return match.category if match.category is not None else scheme.discretize(match.d)


def _check_order(season: SeasonDataset) -> None:
    for a, b in zip(season.matches, season.matches[1:]):
        dated = a.date is not None and b.date is not None
        if b.t < a.t or (dated and b.date < a.date):
            raise DataError(f"season {season.label}: game t={b.t} out of time order")


def run_season(season: SeasonDataset, scheme: DiscretizationScheme,
               config: EngineConfig, initial: SkillTable | None = None) -> SeasonRun:
    """Rate one season game by game.

    Each step records the prediction made from skills *before* that game's
    update.  ``initial`` is copied, never mutated.
    """
    coeffs = config.coefficients
    if scheme.J != coeffs.J:
        raise ValueError(f"scheme J={scheme.J} does not match coefficients J={coeffs.J}")
    _check_order(season)
    table = initial.copy() if initial is not None else SkillTable()
    start = table.copy()
    steps = []

    if config.batch_simultaneous:
        groups = [list(g) for _, g in groupby(
            season.matches, key=lambda m: m.date if m.date is not None else m.t)]
    else:
        groups = [[m] for m in season.matches]

    for group in groups:
        pending = []
        for m in group:
            y = _category(m, scheme)
            _check_pair(m.home, m.away, y, coeffs.J)
            z = table.ensure(m.home) - table.ensure(m.away)
            g, ternary = _predict(z, config)
            pending.append((m, y, z, g, ternary, config.k * (coeffs.scores[y] - g)))
        for m, y, z, g, ternary, change in pending:
            table.skills[m.home] += change
            table.skills[m.away] -= change
            steps.append(RatingStep(
                m.t, m.home, m.away, m.d, y, z, g, change,
                table.skills[m.home], table.skills[m.away], ternary, m.outcome,
            ))
    return SeasonRun(season.label, steps, start, table)


def run_seasons(seasons: Iterable[SeasonDataset], scheme: DiscretizationScheme,
                config: EngineConfig, reset: bool = True,
                theta_init: float = 0.0) -> list[SeasonRun]:
    """Rate consecutive seasons, resetting skills at each start unless told not to."""
    runs = []
    table = SkillTable(theta_init=theta_init)
    for season in seasons:
        run = run_season(season, scheme, config,
                         SkillTable(theta_init=theta_init) if reset else table)
        table = run.final
        runs.append(run)
    return runs


TRAJECTORY_COLUMNS = ("t", "home", "away", "d", "y", "z", "G", "delta_applied",
                      "theta_home_after", "theta_away_after")


def write_trajectory_csv(run: SeasonRun, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for s in run.steps:
        writer.writerow([s.t, s.home, s.away, s.d, s.y, repr(float(s.z)), repr(float(s.expected)),
                         repr(float(s.delta)), repr(float(s.theta_home_after)),
                         repr(float(s.theta_away_after))])
