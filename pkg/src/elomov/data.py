"""Match records, seasons, and the football-data.co.uk CSV layout."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, TextIO

from elomov.errors import DataError

SCHEMA_VERSION = 1
MANDATORY_COLUMNS = ("Date", "HomeTeam", "AwayTeam", "FTHG", "FTAG")
ODDS_COLUMNS = ("B365H", "B365D", "B365A")
DATE_FORMATS = ("%d/%m/%Y", "%d/%m/%y", "%Y-%m-%d")


@dataclass(frozen=True)
class MatchRecord:
    """One game.  ``category`` optionally overrides the discretized outcome."""

    t: int
    home: str
    away: str
    home_points: int
    away_points: int
    date: date | None = None
    odds: tuple[float, float, float] | None = None
    category: int | None = None

    def __post_init__(self):
        if self.home == self.away:
            raise ValueError(f"game {self.t}: team {self.home!r} cannot play itself")
        if self.home_points < 0 or self.away_points < 0:
            raise ValueError(f"game {self.t}: negative points")

    @property
    def d(self) -> int:
        return self.home_points - self.away_points

    @property
    def outcome(self) -> str:
        """Ternary result: ``"H"``, ``"D"`` or ``"A"``."""
        return "H" if self.d > 0 else "A" if self.d < 0 else "D"

    def to_dict(self) -> dict:
        out = {
            "t": self.t,
            "date": self.date.isoformat() if self.date else None,
            "home": self.home,
            "away": self.away,
            "home_points": self.home_points,
            "away_points": self.away_points,
            "odds": list(self.odds) if self.odds else None,
        }
        if self.category is not None:
            out["category"] = self.category
        return out

    @classmethod
    def from_dict(cls, data: dict) -> MatchRecord:
        return cls(
            t=int(data["t"]),
            home=data["home"],
            away=data["away"],
            home_points=int(data["home_points"]),
            away_points=int(data["away_points"]),
            date=date.fromisoformat(data["date"]) if data.get("date") else None,
            odds=tuple(data["odds"]) if data.get("odds") else None,
            category=data.get("category"),
        )


@dataclass(frozen=True)
class SeasonDataset:
    label: str
    matches: tuple[MatchRecord, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "matches", tuple(self.matches))

    def __len__(self):
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    @property
    def teams(self) -> frozenset[str]:
        return frozenset(n for m in self.matches for n in (m.home, m.away))

    def validate_round_robin(self) -> None:
        """Check every ordered pair of teams meets exactly once."""
        teams = self.teams
        pairs = {}
        for m in self.matches:
            pairs[(m.home, m.away)] = pairs.get((m.home, m.away), 0) + 1
        n = len(teams)
        if len(self.matches) != n * (n - 1) or any(c != 1 for c in pairs.values()):
            raise DataError(
                f"season {self.label}: {len(self.matches)} games among {n} teams "
                f"is not a double round-robin ({n * (n - 1)} expected)"
            )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "metadata": self.metadata,
            "matches": [m.to_dict() for m in self.matches],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SeasonDataset:
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DataError(f"unsupported season schema version {version!r}")
        matches = [MatchRecord.from_dict(m) for m in data["matches"]]
        return cls(data["label"], tuple(matches), data.get("metadata", {}))


def _parse_date(text: str) -> date:
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise ValueError(f"unrecognized date {text!r}")


def _parse_odds(row: dict) -> tuple[float, float, float] | None:
    raw = [(row.get(c) or "").strip() for c in ODDS_COLUMNS]
    if not all(raw):
        return None
    try:
        return tuple(float(v) for v in raw)
    except ValueError:
        return None


def parse_season_csv(stream: TextIO | str, label: str) -> SeasonDataset:
    """Parse one football-data.co.uk season file.

    Games are ordered by date, ties kept in file order; a file with no
    dates at all keeps file order.  All bad rows are
    collected into a single :class:`DataError`.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.DictReader(stream)
    header = [h.strip().lstrip("﻿") for h in (reader.fieldnames or [])]
    if not header:
        raise DataError(f"season {label}: empty file")
    reader.fieldnames = header
    missing = [c for c in MANDATORY_COLUMNS if c not in header]
    if missing:
        raise DataError(f"season {label}: missing columns {missing}")

    parsed, errors = [], []
    for lineno, row in enumerate(reader, start=2):
        if not any((v or "").strip() for k, v in row.items() if k is not None):
            continue
        try:
            home = row["HomeTeam"].strip()
            away = row["AwayTeam"].strip()
            if not home or not away:
                raise ValueError("empty team name")
            day = _parse_date(row["Date"]) if (row["Date"] or "").strip() else None
            hg, ag = row["FTHG"].strip(), row["FTAG"].strip()
            try:
                hp, ap = int(hg), int(ag)
            except ValueError:
                raise ValueError(f"non-integer goals FTHG={hg!r} FTAG={ag!r}") from None
            parsed.append((day, len(parsed), home, away, hp, ap, _parse_odds(row)))
        except (ValueError, AttributeError) as exc:
            errors.append((lineno, str(exc)))
    if errors:
        detail = "; ".join(f"row {n}: {msg}" for n, msg in errors[:10])
        raise DataError(f"season {label}: {len(errors)} bad row(s): {detail}",
                        rows=[n for n, _ in errors])
    if not parsed:
        raise DataError(f"season {label}: no games")

    undated = sum(r[0] is None for r in parsed)
    if undated == len(parsed):
        pass  # file order is the time order
    elif undated:
        raise DataError(f"season {label}: {undated} game(s) lack a date while others have one")
    else:
        parsed.sort(key=lambda r: (r[0], r[1]))
    matches = []
    for t, (day, _, home, away, hp, ap, odds) in enumerate(parsed):
        try:
            matches.append(MatchRecord(t, home, away, hp, ap, day, odds))
        except ValueError as exc:
            raise DataError(f"season {label}: {exc}") from None
    return SeasonDataset(label, tuple(matches))


def write_season_csv(season: SeasonDataset, stream: TextIO) -> None:
    """Write a season in the football-data.co.uk column layout."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["Date", "HomeTeam", "AwayTeam", "FTHG", "FTAG", "FTR", *ODDS_COLUMNS])
    for m in season.matches:
        day = m.date.strftime("%d/%m/%Y") if m.date else ""
        odds = [repr(float(o)) for o in m.odds] if m.odds else ["", "", ""]
        writer.writerow([day, m.home, m.away, m.home_points, m.away_points,
                         m.outcome, *odds])


def load_season(path: str | Path, label: str | None = None) -> SeasonDataset:
    """Load a season from canonical JSON or a football-data CSV file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            return SeasonDataset.from_dict(json.loads(path.read_text()))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed season JSON ({exc})") from None
    with path.open(newline="", encoding="utf-8-sig") as fh:
        return parse_season_csv(fh, label or path.stem)


def save_season(season: SeasonDataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(season.to_dict(), indent=1))


def split_seasons(datasets: Iterable[SeasonDataset], train_labels: Iterable[str],
                  test_labels: Iterable[str] = ()):
    """Partition seasons into (train, test), preserving input order."""
    datasets = list(datasets)
    train_labels, test_labels = set(train_labels), set(test_labels)
    overlap = train_labels & test_labels
    if overlap:
        raise DataError(f"labels in both train and test sets: {sorted(overlap)}")
    labels = [s.label for s in datasets]
    dupes = sorted({x for x in labels if labels.count(x) > 1})
    if dupes:
        raise DataError(f"duplicate season labels: {dupes}")
    absent = (train_labels | test_labels) - set(labels)
    if absent:
        raise DataError(f"unknown season labels: {sorted(absent)}")
    train = [s for s in datasets if s.label in train_labels]
    test = [s for s in datasets if s.label in test_labels]
    return train, test
