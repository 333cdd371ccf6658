"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import bisect

from elomov.data import load_season, parse_season_csv, save_season, split_seasons
from elomov.engine import EngineConfig, run_season, write_trajectory_csv
from elomov.errors import DataError, EstimationError
from elomov.estimation import (
    FitConfig,
    closed_form_coefficients,
    count_frequencies,
    ml_fit,
    sweep_step,
)
from elomov.evaluation import EvalConfig, evaluate
from elomov.model import (
    DEFAULT_SIGMA,
    DiscretizationScheme,
    ModelCoefficients,
    category_probs,
    expected_score,
)
from elomov.simulator import SimSpec, generate_league, spread_skills

log = logging.getLogger("elomov")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
COEFF_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scheme: str = "2"
    sigma: float | None = None
    k: float | None = None
    k_grid: str | None = None
    mode: str = "freq"
    tau: float = 0.5
    train_labels: str | None = None
    test_labels: str | None = None
    seed: int = 0
    out: str = "."
    coefficients: str | None = None
    smoothing: float = 0.0
    tolerance: float = 1e-6
    max_iterations: int = 10_000
    init: str = "freq"
    hfa: bool = True
    reset: bool = True
    batch_simultaneous: bool = False
    teams: int = 20
    spread: float = 0.0
    rounds: int = 1
    seasons: int = 1
    z_range: str = "-800:800:10"
    inputs: list[str] = field(default_factory=list)

    def parsed_scheme(self) -> DiscretizationScheme:
        try:
            return DiscretizationScheme.parse(self.scheme)
        except ValueError as exc:
            raise UsageError(f"--scheme: {exc}") from None

    def grid(self) -> list[float]:
        lo, hi, step = _triple(self.k_grid, "--k-grid")
        return FitConfig(k_lo=lo, k_hi=hi, k_step=step).k_grid()

    def fit_config(self) -> FitConfig:
        return FitConfig(self.tolerance, self.max_iterations, self.smoothing, self.init)

    def labels(self, which: str) -> list[str] | None:
        raw = getattr(self, f"{which}_labels")
        return [x.strip() for x in raw.split(",") if x.strip()] if raw else None


def _triple(text: str | None, flag: str) -> tuple[float, float, float]:
    if not text:
        raise UsageError(f"{flag} is required (lo:hi:step)")
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"{flag} must look like lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise UsageError(f"{flag} needs lo <= hi and step > 0")
    return lo, hi, step


def _coerce(name: str, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if isinstance(value, str):
        if "bool" in kind:
            low = value.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise UsageError(f"config key {name}: expected a boolean, got {value!r}")
            return low in ("1", "true", "yes", "on")
        if "float" in kind:
            return float(value)
        if "int" in kind and "list" not in kind:
            return int(value)
    return value


def load_config_file(path: str) -> dict:
    """Read a flat ``key = value`` file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
        parser.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in parser["run"].items():
        name = key.replace("-", "_")
        if name not in known:
            raise UsageError(f"unknown config key {key!r} in {path}")
        try:
            out[name] = _coerce(name, value)
        except ValueError:
            raise UsageError(f"config key {key}: bad value {value!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then command-line flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None and flag != []:
            values[f.name] = flag
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def _load_seasons(cfg: RunConfig):
    if not cfg.inputs:
        raise UsageError("no input season files given")
    seasons = [load_season(p) for p in cfg.inputs]
    labels = [s.label for s in seasons]
    dupes = sorted({x for x in labels if labels.count(x) > 1})
    if dupes:
        raise DataError(f"duplicate season labels: {dupes}")
    return seasons


def _select(seasons, cfg: RunConfig, which: str):
    wanted = cfg.labels(which)
    if wanted is None:
        return seasons
    if which == "train":
        return split_seasons(seasons, wanted, cfg.labels("test") or ())[0]
    return split_seasons(seasons, cfg.labels("train") or (), wanted)[1]


def load_coefficients(path: str) -> tuple[ModelCoefficients, DiscretizationScheme, dict]:
    try:
        data = json.loads(Path(path).read_text())
        return (ModelCoefficients.from_dict(data),
                DiscretizationScheme.parse(data["scheme"]), data)
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot load coefficients {path}: {exc}") from None


def _coeffs(cfg: RunConfig):
    if not cfg.coefficients:
        raise UsageError("--coefficients FILE is required")
    coeffs, scheme, _ = load_coefficients(cfg.coefficients)
    if cfg.sigma is not None:
        coeffs = coeffs.replace(sigma=cfg.sigma)
    return coeffs, scheme


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def coefficients_document(coeffs: ModelCoefficients, scheme: DiscretizationScheme,
                          mode: str, extra: dict | None = None) -> dict:
    doc = {"schema_version": COEFF_SCHEMA_VERSION, "scheme": str(scheme), "mode": mode,
           "exponent_base": 10, "log": "natural"}
    doc.update(coeffs.to_dict())
    doc["xi"] = None
    doc.update(extra or {})
    return doc


def format_report(doc: dict) -> str:
    fmt = lambda xs: " ".join(f"{x:.4f}" for x in xs)  # noqa: E731
    lines = [
        f"mode: {doc['mode']}   scheme J:thresholds = {doc['scheme']}   sigma = {doc['sigma']:g}",
        f"alpha:       {fmt(doc['alpha'])}",
        f"delta:       {fmt(doc['delta'])}",
        f"scores:      {fmt(doc['scores'])}",
        f"eta:         {doc['eta']:.4f}",
    ]
    if doc.get("xi") is not None:
        lines.append(f"xi:          {doc['xi']:.4f}")
    if doc.get("kappa") is not None:
        lines.append(f"kappa:       {doc['kappa']:.4f}")
    if doc.get("frequencies") is not None:
        lines.append(f"frequencies: {fmt(doc['frequencies'])}   (n = {doc['n_games']})")
    if doc.get("converged") is not None:
        lines.append(f"converged:   {doc['converged']}   iterations = {doc['iterations']}"
                     f"   log-likelihood = {doc['log_likelihood']:.4f}")
    return "\n".join(lines)


def cmd_ingest(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    seen = {}
    for path in cfg.inputs or []:
        p = Path(path)
        with p.open(newline="", encoding="utf-8-sig") as fh:
            try:
                season = parse_season_csv(fh, p.stem)
            except DataError as exc:
                raise DataError(f"{p}: {exc}", exc.rows) from None
        if season.label in seen:
            raise DataError(f"duplicate season label {season.label!r} "
                            f"({seen[season.label]} and {p})")
        seen[season.label] = p
        target = out / f"{season.label}.json"
        save_season(season, target)
        print(f"{p} -> {target} ({len(season)} games, {len(season.teams)} teams)")
    if not seen:
        raise UsageError("no input files given")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig) -> int:
    scheme = cfg.parsed_scheme()
    train = _select(_load_seasons(cfg), cfg, "train")
    freq = count_frequencies(train, scheme, cfg.smoothing)
    extra = {"frequencies": freq.f.tolist(), "n_games": freq.n_games,
             "train_labels": [s.label for s in train]}
    if cfg.mode == "freq":
        coeffs = closed_form_coefficients(freq, cfg.sigma or DEFAULT_SIGMA)
        extra["xi"] = float(np.sqrt(freq.f[0] * freq.f[-1]))
    elif cfg.mode == "ml":
        report = ml_fit(train, scheme, cfg.fit_config(), cfg.sigma or DEFAULT_SIGMA)
        coeffs = report.coefficients
        extra.update(converged=report.converged, iterations=report.iterations,
                     log_likelihood=report.final_log_likelihood,
                     gradient_norm=report.gradient_norm)
    else:
        raise UsageError(f"--mode must be freq or ml, got {cfg.mode!r}")
    doc = coefficients_document(coeffs, scheme, cfg.mode, extra)
    out = _out_dir(cfg)
    (out / "coefficients.json").write_text(json.dumps(doc, indent=2))
    text = format_report(doc)
    (out / "estimate_report.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK


def _engine(cfg: RunConfig, coeffs: ModelCoefficients, k: float | None = None):
    k = cfg.k if k is None else k
    if k is None:
        raise UsageError("--k is required")
    return EngineConfig(k, coeffs, cfg.hfa, cfg.batch_simultaneous)


def _rate_all(seasons, scheme, config, reset: bool):
    runs, table = [], None
    for s in seasons:
        run = run_season(s, scheme, config, None if reset else table)
        table = run.final
        runs.append(run)
    return runs


def cmd_rate(cfg: RunConfig) -> int:
    coeffs, scheme = _coeffs(cfg)
    seasons = _load_seasons(cfg)
    config = _engine(cfg, coeffs)
    out = _out_dir(cfg)
    for run in _rate_all(seasons, scheme, config, cfg.reset):
        with (out / f"trajectory_{run.label}.csv").open("w", newline="") as fh:
            write_trajectory_csv(run, fh)
        with (out / f"ratings_{run.label}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "team", "theta", "theta_over_sigma"])
            for i, (team, theta) in enumerate(run.final.ranking(), start=1):
                w.writerow([i, team, repr(float(theta)), repr(float(theta / coeffs.sigma))])
        print(f"{run.label}: {len(run.steps)} games rated")
    return EXIT_OK


def _write_curve(path: Path, curve) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k_tilde", "avg_log_score"])
        for k, ls in curve:
            w.writerow([repr(float(k)), repr(float(ls))])


def cmd_eval(cfg: RunConfig) -> int:
    coeffs, scheme = _coeffs(cfg)
    test = _select(_load_seasons(cfg), cfg, "test")
    out = _out_dir(cfg)
    eval_config = EvalConfig(cfg.tau)
    runs = _rate_all(test, scheme, _engine(cfg, coeffs), reset=True)
    report = evaluate(runs, test, eval_config)
    with (out / "eval_report.json").open("w") as fh:
        report.write_json(fh)
    with (out / "eval_report.csv").open("w", newline="") as fh:
        report.write_csv(fh)
    print(f"pooled average log score: {report.pooled_log_score:.4f}")
    if report.pooled_baseline_log_score is not None:
        print(f"odds baseline:            {report.pooled_baseline_log_score:.4f}"
              f" ({report.baseline_excluded} games without odds excluded)")
    if cfg.k_grid:
        best, curve = sweep_step(test, coeffs, cfg.grid(), scheme, cfg.tau, cfg.hfa)
        _write_curve(out / "eval_sweep_k.csv", curve)
        print(f"best K on evaluation seasons: {best:g}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    coeffs, scheme = _coeffs(cfg)
    train = _select(_load_seasons(cfg), cfg, "train")
    best, curve = sweep_step(train, coeffs, cfg.grid(), scheme, cfg.tau, cfg.hfa)
    _write_curve(_out_dir(cfg) / "sweep_k.csv", curve)
    print(f"best K: {best:g}  (average log score {dict(curve)[best]:.4f})")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    coeffs, scheme = _coeffs(cfg)
    skills = spread_skills(cfg.teams, cfg.spread * coeffs.sigma)
    out = _out_dir(cfg)
    for i in range(cfg.seasons):
        spec = SimSpec(coeffs, scheme, tuple(skills), cfg.rounds, cfg.seed + i)
        season = generate_league(spec, label=f"sim-{cfg.seed + i}")
        save_season(season, out / f"{season.label}.json")
        print(f"{season.label}: {len(season)} games")
    return EXIT_OK


def score_positions(coeffs: ModelCoefficients) -> list[tuple[int, float, float]]:
    """``(h, z_h, score_h)`` where the expected score with HFA hits ``score_h``.

    ``z_h`` is also where ``P_h(z + eta*sigma)`` peaks; only interior
    categories have a finite solution.
    """
    out = []
    for h in range(1, coeffs.J):
        target = coeffs.scores[h]
        f = lambda z: expected_score(z, coeffs, include_hfa=True) - target  # noqa: E731
        span = coeffs.sigma
        while f(-span) > 0 or f(span) < 0:
            span *= 2
        out.append((h, bisect(f, -span, span, xtol=1e-10 * coeffs.sigma), float(target)))
    return out


def cmd_curves(cfg: RunConfig) -> int:
    coeffs, _ = _coeffs(cfg)
    lo, hi, step = _triple(cfg.z_range, "--z-range")
    z = np.arange(lo, hi + step / 2, step)
    p = category_probs(z, coeffs, include_hfa=True)
    g = expected_score(z, coeffs, include_hfa=True)
    out = _out_dir(cfg)
    with (out / "curves.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", *(f"P{h}" for h in range(coeffs.J + 1)), "G"])
        for row in zip(z, p, g):
            w.writerow([repr(float(row[0])), *(repr(float(x)) for x in row[1]),
                        repr(float(row[2]))])
    with (out / "score_points.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "z_hat", "score"])
        for h, zh, s in score_positions(coeffs):
            w.writerow([h, repr(float(zh)), repr(float(s))])
    print(f"wrote {len(z)} curve points to {out / 'curves.csv'}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "estimate": cmd_estimate,
    "rate": cmd_rate,
    "eval": cmd_eval,
    "sweep-k": cmd_sweep,
    "simulate": cmd_simulate,
    "curves": cmd_curves,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("inputs", nargs="*", help="season files (CSV or canonical JSON)")
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--scheme", help="discretization J:thresholds, e.g. 4:2 or 6:1,2")
    common.add_argument("--sigma", type=float)
    common.add_argument("--k", type=float, help="normalized step K~")
    common.add_argument("--k-grid", dest="k_grid", help="K~ sweep lo:hi:step")
    common.add_argument("--mode", choices=("freq", "ml"))
    common.add_argument("--tau", type=float, help="burn-in fraction of each season")
    common.add_argument("--train-labels", dest="train_labels")
    common.add_argument("--test-labels", dest="test_labels")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--coefficients", help="coefficients JSON from `estimate`")
    common.add_argument("--smoothing", type=float)
    common.add_argument("--init", choices=("freq", "zero"))
    common.add_argument("--no-hfa", dest="hfa", action="store_const", const=False)
    common.add_argument("--no-reset", dest="reset", action="store_const", const=False)
    common.add_argument("--batch-simultaneous", dest="batch_simultaneous",
                        action="store_const", const=True)
    common.add_argument("--teams", type=int)
    common.add_argument("--spread", type=float, help="skill spread in units of sigma")
    common.add_argument("--rounds", type=int, help="double round-robins per season")
    common.add_argument("--seasons", type=int)
    common.add_argument("--z-range", dest="z_range")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="elomov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
