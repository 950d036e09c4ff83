"""Command-line front end.

Every run resolves a configuration from ``--config`` (JSON) overlaid with
command-line flags, writes its outputs into ``--out`` and records the
resolved configuration in ``manifest.json``. A manifest is itself a valid
``--config``, so ``acaf <command> --config out/manifest.json --out other/``
reproduces a run.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    TABLE9_THETA,
    MaximaSeries,
    ModelSpec,
    ParamVector,
    filter_path,
    simulate,
)
from .estimation import FitConfig, FitError, conditional_var, fit_variant
from .factor_lab import FactorLabConfig, NoiseLaw, convergence_experiment, write_table
from .ingestion import PricePanel, TickSeries, cross_sectional_maxima, intraday_maxima

logger = logging.getLogger("acaf")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 4

COMMANDS = ("simulate", "fit", "filter", "var", "ingest", "factorlab")

DEFAULTS: dict[str, dict] = {
    "simulate": {"n": 1000, "burn_in": 500, "seed": 0, "model": "acaf_full", "theta": None},
    "fit": {"input": None, "model": "acaf_full", "seed": 0, "n_starts": 20, "max_iters": 30000,
            "f_tol": 1e-8, "x_tol": 1e-8, "jitter": 0.5, "max_restarts": 5},
    "filter": {"input": None, "theta": None, "model": "acaf_full"},
    "var": {"input": None, "theta": None, "model": "acaf_full", "level": 0.99},
    "ingest": {"input": None, "mode": "panel", "interval_min": 5, "delimiter": ",",
               "date_column": "date", "time_column": "timestamp", "price_column": "price"},
    "factorlab": {"noise1": "t:3", "noise2": "t:5", "p_grid": [100, 1000, 10000], "reps": 1000,
                  "seed": 0, "threshold": 0.05, "dump": False},
}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    out: Path
    options: dict = field(default_factory=dict)
    verbosity: int = 0

    @property
    def seed(self):
        return self.options.get("seed")

    def manifest(self) -> dict:
        return {"command": self.command, "version": __version__, **_jsonable(self.options)}


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, ParamVector):
            v = v.to_dict()
        out[k] = v
    return out


def _load_theta(value) -> ParamVector:
    if value is None:
        return TABLE9_THETA
    if isinstance(value, dict):
        return ParamVector.from_dict(value.get("estimates", value))
    path = Path(value)
    if not path.exists():
        raise InputError(f"theta file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return ParamVector.from_dict(d.get("estimates", d))


def _load_series(path) -> MaximaSeries:
    if path is None:
        raise InputError("--input is required")
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    return MaximaSeries.from_csv(path)


def _write_manifest(cfg: RunConfig, extra: dict | None = None) -> None:
    doc = cfg.manifest()
    if extra:
        doc["report"] = extra
    with open(cfg.out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _cmd_simulate(cfg: RunConfig) -> None:
    o = cfg.options
    spec = ModelSpec.parse(o["model"])
    theta = _load_theta(o["theta"])
    if spec is not ModelSpec.ACAF_FULL:
        theta = theta.restrict(spec)
    o["theta"] = theta.to_dict()
    path = simulate(theta, spec, int(o["n"]), burn_in=int(o["burn_in"]), seed=o["seed"])
    path.to_csv(cfg.out / "observations.csv", cfg.out / "latent.csv")
    _write_manifest(cfg)


def _cmd_fit(cfg: RunConfig) -> None:
    o = cfg.options
    series = _load_series(o["input"])
    config = FitConfig(
        n_starts=int(o["n_starts"]), max_iters=int(o["max_iters"]), f_tol=float(o["f_tol"]),
        x_tol=float(o["x_tol"]), seed=int(o["seed"]), model=o["model"], jitter=float(o["jitter"]),
        max_restarts=int(o["max_restarts"]),
    )
    result = fit_variant(series, config.model, config)
    result.to_json(cfg.out / "fit.json")
    result.latent_path.to_csv(cfg.out / "latent.csv", series.labels)
    logger.info("\n%s", result.summary())
    _write_manifest(cfg)


def _cmd_filter(cfg: RunConfig) -> None:
    o = cfg.options
    series = _load_series(o["input"])
    theta = _load_theta(o["theta"])
    o["theta"] = theta.to_dict()
    filter_path(theta, series).to_csv(cfg.out / "latent.csv", series.labels)
    _write_manifest(cfg)


def _cmd_var(cfg: RunConfig) -> None:
    o = cfg.options
    series = _load_series(o["input"])
    theta = _load_theta(o["theta"])
    o["theta"] = theta.to_dict()
    level = float(o["level"])
    if not 0 < level < 1:
        raise InputError("--level must lie strictly inside (0, 1)")
    if not theta.mu < series.q_min:
        raise InputError("theta is infeasible for this series (mu not below every observation)")
    var = conditional_var(theta, series, level, spec=o["model"])
    labels = series.labels if series.labels is not None else range(len(series))
    exceed = series.values > var
    with open(cfg.out / "var.csv", "w", encoding="utf-8") as fh:
        fh.write("t,Q,var,exceed\n")
        for t, qv, v, e in zip(labels, series.values, var, exceed):
            fh.write(f"{t},{qv:.15g},{v:.15g},{int(e)}\n")
    _write_manifest(cfg, {"exceedance_rate": float(exceed.mean())})


def _cmd_ingest(cfg: RunConfig) -> None:
    o = cfg.options
    if o["input"] is None or not Path(o["input"]).exists():
        raise InputError(f"input file not found: {o['input']}")
    if o["mode"] == "panel":
        panel = PricePanel.from_csv(o["input"], date_column=o["date_column"], delimiter=o["delimiter"])
        series, report = cross_sectional_maxima(panel)
    elif o["mode"] == "intraday":
        ticks = TickSeries.from_csv(o["input"], time_column=o["time_column"],
                                    price_column=o["price_column"], delimiter=o["delimiter"])
        series, report = intraday_maxima(ticks, int(o["interval_min"]))
    else:
        raise InputError(f"unknown ingest mode {o['mode']!r}")
    series.to_csv(cfg.out / "maxima.csv")
    line = report.manifest_line()
    with open(cfg.out / "ingest_report.txt", "w", encoding="utf-8") as fh:
        fh.write(line + "\n")
        for label, reason in report.dropped:
            fh.write(f"dropped {label} {reason}\n")
    _write_manifest(cfg, {"manifest_line": line, "dropped": report.dropped,
                          "contributors": report.contributors.tolist()})


def _cmd_factorlab(cfg: RunConfig) -> None:
    o = cfg.options
    config = FactorLabConfig(
        noise1=NoiseLaw.parse(o["noise1"]), noise2=NoiseLaw.parse(o["noise2"]),
        p_grid=tuple(int(p) for p in o["p_grid"]), reps=int(o["reps"]), seed=int(o["seed"]),
    )
    dump = cfg.out / "normalized_maxima.csv" if o.get("dump") else None
    rows = convergence_experiment(config, threshold=float(o["threshold"]), dump=dump)
    write_table(rows, cfg.out / "factorlab.csv")
    _write_manifest(cfg)


HANDLERS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "filter": _cmd_filter,
    "var": _cmd_var,
    "ingest": _cmd_ingest,
    "factorlab": _cmd_factorlab,
}


def run(cfg: RunConfig) -> int:
    """Dispatch one resolved run; returns the process exit status."""
    if cfg.command not in HANDLERS:
        logger.error("unknown command %r", cfg.command)
        return EXIT_INPUT
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        HANDLERS[cfg.command](cfg)
    except FitError as exc:
        logger.error("%s: %s", cfg.command, exc)
        for s in exc.starts:
            logger.error("  start %d converged=%s nll=%.6g (%s)", s.index, s.converged, s.nll, s.message)
        return EXIT_CONVERGENCE
    except (InputError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s: input error: %s", cfg.command, exc)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        logger.exception("%s: internal error", cfg.command)
        return EXIT_INTERNAL
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (a previous manifest works)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--model", choices=["acaf", "acaf-static-a1", "acf"])
    common.add_argument("--input", type=Path)
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="acaf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a maxima series")
    s.add_argument("--n", type=int)
    s.add_argument("--burn-in", dest="burn_in", type=int)
    s.add_argument("--theta", help="parameter JSON (defaults to the S&P 500 estimates)")

    f = sub.add_parser("fit", parents=[common], help="conditional MLE")
    f.add_argument("--n-starts", dest="n_starts", type=int)
    f.add_argument("--max-iters", dest="max_iters", type=int)

    fl = sub.add_parser("filter", parents=[common], help="latent path for given parameters")
    fl.add_argument("--theta")

    v = sub.add_parser("var", parents=[common], help="conditional quantiles")
    v.add_argument("--theta")
    v.add_argument("--level", type=float)

    i = sub.add_parser("ingest", parents=[common], help="build maxima from prices")
    i.add_argument("--mode", choices=["panel", "intraday"])
    i.add_argument("--interval-min", dest="interval_min", type=int)
    i.add_argument("--delimiter")

    x = sub.add_parser("factorlab", parents=[common], help="factor-model limit experiment")
    x.add_argument("--noise1")
    x.add_argument("--noise2")
    x.add_argument("--p-grid", dest="p_grid", type=int, nargs="+")
    x.add_argument("--reps", type=int)
    x.add_argument("--dump", action="store_true", default=None)
    return p


_MODEL_FLAGS = {"acaf": "acaf_full", "acaf-static-a1": "acaf_static_alpha1", "acf": "acf"}
_NOT_OPTIONS = {"command", "config", "out", "verbose"}


def resolve(argv: list[str] | None = None) -> RunConfig:
    """Parse ``argv`` into a :class:`RunConfig`; flags override the config file."""
    args = _parser().parse_args(argv)
    options = dict(DEFAULTS[args.command])
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("command", args.command) != args.command:
            raise InputError(f"config is for {doc['command']!r}, not {args.command!r}")
        options.update({k: v for k, v in doc.items() if k not in ("command", "version", "report")})
    for k, v in vars(args).items():
        if k in _NOT_OPTIONS or v is None:
            continue
        options[k] = _MODEL_FLAGS[v] if k == "model" else v
    for k in ("input",):
        if isinstance(options.get(k), Path):
            options[k] = str(options[k])
    return RunConfig(args.command, args.out, options, args.verbose)


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = resolve(argv)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
        logger.error("%s", exc)
        return EXIT_INPUT
    level = logging.WARNING - 10 * min(cfg.verbosity, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    np.seterr(all="ignore")
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
