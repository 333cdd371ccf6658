"""Ternary predictions, logarithmic score, and the betting-odds baseline."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from elomov.model import ModelCoefficients, category_probs

OUTCOMES = ("H", "D", "A")


@dataclass(frozen=True)
class EvalConfig:
    tau_fraction: float = 0.5

    def __post_init__(self):
        if not 0 <= self.tau_fraction < 1:
            raise ValueError(f"tau_fraction must lie in [0, 1), got {self.tau_fraction}")

    def burn_in(self, n_games: int) -> int:
        return math.floor(self.tau_fraction * n_games)


def merge_ternary(p: np.ndarray) -> tuple[float, float, float]:
    """Collapse category probabilities of an even-J model to (P_H, P_D, P_A)."""
    J = p.shape[-1] - 1
    if J % 2:
        raise ValueError(f"odd J={J} has no draw category")
    mid = J // 2
    return float(p[mid + 1:].sum()), float(p[mid]), float(p[:mid].sum())


def ternary_probs(z: float, coeffs: ModelCoefficients,
                  include_hfa: bool = True) -> tuple[float, float, float]:
    """Home-win, draw and away-win probabilities at rating difference ``z``."""
    return merge_ternary(category_probs(z, coeffs, include_hfa))


def log_score(probs: Sequence[float], outcome: str) -> float:
    """Negative natural log of the probability given to ``outcome``.

    Returns ``inf`` when the realized outcome had zero probability.
    """
    p = probs[OUTCOMES.index(outcome)]
    return -math.log(p) if p > 0 else math.inf


def average_log_score(runs: Iterable, config: EvalConfig = EvalConfig()) -> float:
    """Mean log score over games after the burn-in of every season run.

    ``runs`` holds objects with a ``steps`` list whose items carry
    ``probs`` (P_H, P_D, P_A) and ``outcome``.
    """
    total, count = 0.0, 0
    for run in runs:
        tau = config.burn_in(len(run.steps))
        for step in run.steps[tau:]:
            total += log_score(step.probs, step.outcome)
            count += 1
    if count == 0:
        raise ValueError("empty evaluation window")
    return total / count


def odds_baseline(match) -> tuple[float, float, float]:
    """Normalized inverse decimal odds (P_H, P_D, P_A) for ``match``."""
    odds = getattr(match, "odds", match)
    if odds is None or len(odds) != 3:
        raise ValueError("missing odds")
    if not all(o > 1 and math.isfinite(o) for o in odds):
        raise ValueError(f"decimal odds must exceed 1, got {tuple(odds)}")
    inv = [1.0 / o for o in odds]
    s = sum(inv)
    return tuple(v / s for v in inv)


@dataclass
class SeasonScore:
    label: str
    n_games: int
    n_window: int
    log_score: float
    baseline_log_score: float | None = None
    baseline_games: int = 0
    baseline_excluded: int = 0
    infinite_scores: int = 0


@dataclass
class EvaluationReport:
    tau_fraction: float
    seasons: list[SeasonScore] = field(default_factory=list)
    pooled_log_score: float = math.nan
    pooled_baseline_log_score: float | None = None
    baseline_excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "log": "natural",
            "tau_fraction": self.tau_fraction,
            "pooled_log_score": self.pooled_log_score,
            "pooled_baseline_log_score": self.pooled_baseline_log_score,
            "baseline_excluded": self.baseline_excluded,
            "seasons": [asdict(s) for s in self.seasons],
        }

    def write_json(self, stream: TextIO) -> None:
        json.dump(self.to_dict(), stream, indent=2)

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        cols = list(SeasonScore.__dataclass_fields__)
        writer.writerow(cols)
        for s in self.seasons:
            writer.writerow([getattr(s, c) for c in cols])
        writer.writerow(["pooled", sum(s.n_games for s in self.seasons),
                         sum(s.n_window for s in self.seasons), self.pooled_log_score,
                         self.pooled_baseline_log_score,
                         sum(s.baseline_games for s in self.seasons),
                         self.baseline_excluded,
                         sum(s.infinite_scores for s in self.seasons)])


def evaluate(runs: Sequence, seasons: Sequence | None = None,
             config: EvalConfig = EvalConfig()) -> EvaluationReport:
    """Per-season and pooled log scores, plus the odds baseline when ``seasons``
    (carrying odds) are given alongside their runs.

    Games without usable odds are dropped from the baseline only.
    """
    report = EvaluationReport(config.tau_fraction)
    model_sum = model_n = base_sum = base_n = 0
    for i, run in enumerate(runs):
        tau = config.burn_in(len(run.steps))
        window = run.steps[tau:]
        scores = [log_score(s.probs, s.outcome) for s in window]
        if not scores:
            raise ValueError(f"season {run.label}: empty evaluation window")
        entry = SeasonScore(run.label, len(run.steps), len(window),
                            sum(scores) / len(scores),
                            infinite_scores=sum(math.isinf(x) for x in scores))
        model_sum += sum(scores)
        model_n += len(scores)
        if seasons is not None:
            b = []
            for m in seasons[i].matches[tau:]:
                try:
                    b.append(log_score(odds_baseline(m), m.outcome))
                except ValueError:
                    entry.baseline_excluded += 1
            entry.baseline_games = len(b)
            if b:
                entry.baseline_log_score = sum(b) / len(b)
                base_sum += sum(b)
                base_n += len(b)
        report.seasons.append(entry)
        report.baseline_excluded += entry.baseline_excluded
    report.pooled_log_score = model_sum / model_n
    if base_n:
        report.pooled_baseline_log_score = base_sum / base_n
    return report
