"""Command-line interface.

Exit codes: 0 ok, 1 a verification reported failure, 2 bad input,
3 violated precondition, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, hypercube, spectral
from .dynamics import StopRule, UpdateParams, simulate
from .errors import ConvergenceError, GraphFormatError, PreconditionError
from .selection import KINDS, load_selection_csv, make_selection
from .signed_graph import balance_verdict, load_graph

SCHEMA_VERSION = 1
EXIT_FAILED, EXIT_INPUT, EXIT_PRECONDITION, EXIT_CONVERGENCE = 1, 2, 3, 4

# run settings that --config may supply, with their flag defaults
DEFAULTS = {
    "graph": None, "selection": "uniform-neighbor", "alpha": 0.5, "beta": 0.0,
    "rule": "symmetric", "bound": None, "asym": None, "x0": "uniform",
    "trials": 100, "horizon": 10000, "record_every": 1, "seed": 0,
    "eps_conv": 1e-9, "m_div": None, "workers": 1, "beta_grid": None, "trial": 0,
}

log = logging.getLogger(__name__)


class InputError(Exception):
    pass


def _asym(text):
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return vals


def _add_run_flags(p, *names):
    flags = {
        "graph": lambda: p.add_argument("--graph", help="signed edge-list file"),
        "selection": lambda: p.add_argument(
            "--selection", help=f"one of {', '.join(KINDS[:-1])}, or a CSV matrix path"),
        "alpha": lambda: p.add_argument("--alpha", type=float),
        "beta": lambda: p.add_argument("--beta", type=float),
        "rule": lambda: p.add_argument("--rule", choices=("symmetric", "asymmetric-constrained",
                                                           "altafini")),
        "bound": lambda: p.add_argument("--bound", type=float, help="belief limit A"),
        "asym": lambda: p.add_argument("--asym", type=_asym, metavar="a,b,c"),
        "x0": lambda: p.add_argument("--x0", help="'uniform' or comma-separated beliefs"),
        "trials": lambda: p.add_argument("--trials", type=int),
        "horizon": lambda: p.add_argument("--horizon", type=int),
        "record_every": lambda: p.add_argument("--record-every", type=int),
        "seed": lambda: p.add_argument("--seed", type=int),
        "eps_conv": lambda: p.add_argument("--eps-conv", type=float),
        "m_div": lambda: p.add_argument("--m-div", type=float),
        "workers": lambda: p.add_argument("--workers", type=int),
        "beta_grid": lambda: p.add_argument("--beta-grid", help="comma list or lo:hi:count"),
    }
    for name in names:
        flags[name]()
    p.add_argument("--config", help="JSON settings (or a manifest); overrides flags")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="signed-gossip",
                                 description="Gossip dynamics on signed graphs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("balance", help="strong and weak structural balance")
    _add_run_flags(p, "graph")

    p = sub.add_parser("analyze", help="spectral convergence report")
    _add_run_flags(p, "graph", "selection", "alpha", "beta")
    p.add_argument("--require-connected", action="store_true")
    p.add_argument("--no-lambda-star", action="store_true")

    run_flags = ("graph", "selection", "alpha", "beta", "rule", "bound", "asym", "x0",
                 "horizon", "record_every", "seed", "eps_conv", "m_div")
    p = sub.add_parser("simulate", help="one trajectory as CSV")
    _add_run_flags(p, *run_flags)
    p.add_argument("--trial", type=int, help="trial index within the seed")

    p = sub.add_parser("montecarlo", help="classify repeated trials")
    _add_run_flags(p, *run_flags, "trials", "workers")

    p = sub.add_parser("sweep", help="Monte Carlo fractions along a beta grid")
    _add_run_flags(p, *run_flags, "trials", "workers", "beta_grid")
    p.add_argument("--no-lambda-star", action="store_true")

    p = sub.add_parser("hypercube", help="finite-time averaging schedules")
    hsub = p.add_subparsers(dest="action", required=True)
    q = hsub.add_parser("gen", help="generate a schedule")
    q.add_argument("-m", type=int, required=True, help="cube dimension")
    q.add_argument("--graph", help="host graph; a hypercube labeling is searched in it")
    q.add_argument("--labeling", help="comma-separated vertex per corner")
    q.add_argument("--out")
    q = hsub.add_parser("verify", help="check that a schedule reaches the average")
    q.add_argument("--schedule", required=True)
    q.add_argument("-n", type=int)
    q.add_argument("--alpha", type=float, default=0.5)
    q.add_argument("--graph", help="also check pairs are positive edges of this graph")
    q.add_argument("--out")
    q = hsub.add_parser("check", help="necessary conditions for finite-time consensus")
    q.add_argument("--graph", required=True)
    q.add_argument("--alpha", type=float, default=0.5)
    q.add_argument("--out")
    return ap


# --- settings ------------------------------------------------------------------


def resolve_settings(args) -> dict:
    """Flag values over defaults, then --config on top."""
    settings = {}
    for key, default in DEFAULTS.items():
        value = getattr(args, key, None)
        settings[key] = default if value is None else value
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from None
        if isinstance(data, dict) and "config" in data and "schema_version" in data:
            data = data["config"]
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        settings.update(data)
    if isinstance(settings["asym"], list):
        settings["asym"] = tuple(settings["asym"])
    return settings


def _graph(settings):
    if not settings["graph"]:
        raise InputError("--graph is required")
    return load_graph(settings["graph"])


def _selection(settings, g):
    kind = settings["selection"]
    if kind in KINDS and kind != "custom":
        return make_selection(kind, g)
    return load_selection_csv(kind, g)


def _params(settings):
    kw = {"alpha": settings["alpha"], "beta": settings["beta"], "rule": settings["rule"]}
    if settings["asym"] is not None:
        kw["asym"] = tuple(settings["asym"])
    if settings["bound"] is not None:
        kw["bound"] = settings["bound"]
    elif settings["rule"] == "asymmetric-constrained":
        kw["bound"] = 1.0
    return UpdateParams(**kw)


def _x0(settings):
    x0 = settings["x0"]
    if isinstance(x0, str) and x0 != "uniform":
        try:
            return tuple(float(t) for t in x0.split(","))
        except ValueError:
            raise InputError("x0 must be 'uniform' or comma-separated numbers") from None
    return tuple(x0) if isinstance(x0, list) else x0


def _experiment(settings, track_pairs=True):
    g = _graph(settings)
    return experiments.ExperimentConfig(
        graph=g, selection=_selection(settings, g), params=_params(settings),
        horizon=settings["horizon"], x0=_x0(settings), record_every=settings["record_every"],
        eps_conv=settings["eps_conv"], m_div=settings["m_div"], track_pairs=track_pairs)


def _beta_grid(spec):
    if spec is None:
        raise InputError("--beta-grid is required")
    if isinstance(spec, list):
        return [float(b) for b in spec]
    try:
        if ":" in spec:
            lo, hi, count = spec.split(":")
            return np.linspace(float(lo), float(hi), int(count)).tolist()
        return [float(t) for t in spec.split(",")]
    except ValueError:
        raise InputError("beta grid must be 'b1,b2,...' or 'lo:hi:count'") from None


# --- output --------------------------------------------------------------------


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_manifest(out, command: str, settings: dict) -> Path | None:
    """Record config, seed and versions next to ``out``; rerunning with
    ``--config <manifest>`` reproduces the output."""
    if not out:
        return None
    path = Path(str(out) + ".manifest.json")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": settings,
        "seeds": {"base_seed": settings.get("seed")},
        "versions": {"signed_gossip": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    path.write_text(_json(manifest))
    return path


# --- commands ------------------------------------------------------------------


def cmd_balance(args) -> int:
    settings = resolve_settings(args)
    v = balance_verdict(_graph(settings))
    out = {"strong": _groups(v.strong), "weak": _groups(v.weak)}
    if v.strong is None:
        out["witness"] = list(v.witness)
    _emit(json.dumps(out) + "\n", args.out)
    return 0


def _groups(partition):
    return None if partition is None else [list(g) for g in partition]


def cmd_analyze(args) -> int:
    settings = resolve_settings(args)
    g = _graph(settings)
    model = spectral.SpectralModel.build(g, _selection(settings, g))
    report = spectral.analysis_report(model, settings["alpha"], settings["beta"],
                                      require_connected=args.require_connected,
                                      with_lambda_star=not args.no_lambda_star)
    _emit(_json(report), args.out)
    write_manifest(args.out, "analyze", settings)
    return 0


def cmd_simulate(args) -> int:
    settings = resolve_settings(args)
    cfg = _experiment(settings)
    dyn_rng, x0_rng = experiments.trial_streams(settings["seed"], settings["trial"])
    x0 = cfg.initial_state(x0_rng)
    m_div = settings["m_div"]
    stop = StopRule(cfg.eps_conv, m_div) if m_div is not None else StopRule.default(x0)
    stats = simulate(cfg.graph, cfg.selection, cfg.params, x0, cfg.horizon, dyn_rng,
                     record_every=cfg.record_every, stop=stop, snapshots=True,
                     track_pairs=False)
    _emit(stats.to_csv(), args.out)
    write_manifest(args.out, "simulate", settings)
    return 0


def cmd_montecarlo(args) -> int:
    settings = resolve_settings(args)
    cfg = _experiment(settings)
    outcomes = experiments.run_trials(cfg, settings["trials"], settings["seed"],
                                      settings["workers"])
    report = {"trials": len(outcomes), "fractions": experiments.fractions(outcomes),
              "outcomes": [{"trial": o.trial, "classification": o.classification,
                            "stop_k": o.stop_k, "final_spread": o.final_spread,
                            "cluster": None if o.cluster is None else list(o.cluster)}
                           for o in outcomes]}
    if any(o.classification == "diverged" for o in outcomes):
        report["no_survivor"] = experiments.no_survivor_check(outcomes)._asdict()
    if cfg.params.bounded:
        report["oscillation_fraction"] = experiments.oscillation_check(outcomes)
        verdict = balance_verdict(cfg.graph) if cfg.graph.is_connected() else None
        for kind in ("strong", "weak"):
            part = None if verdict is None else getattr(verdict, kind)
            if part is not None and len(part) >= 2:
                rep = experiments.clustering_check(outcomes, verdict, kind)
                report["clustering"] = {"kind": kind, **rep._asdict(),
                                        "fraction": rep.fraction}
                break
    _emit(_json(report), args.out)
    write_manifest(args.out, "montecarlo", settings)
    return 0


def cmd_sweep(args) -> int:
    settings = resolve_settings(args)
    cfg = _experiment(settings, track_pairs=False)
    grid = _beta_grid(settings["beta_grid"])
    result = experiments.sweep_beta(cfg, grid, settings["trials"], settings["seed"],
                                    settings["workers"],
                                    with_lambda_star=not args.no_lambda_star)
    _emit(result.to_csv(), args.out)
    write_manifest(args.out, "sweep", {**settings, "beta_grid": grid})
    return 0


def cmd_hypercube(args) -> int:
    if args.action == "gen":
        g = load_graph(args.graph) if args.graph else None
        if args.labeling:
            labeling = [int(t) for t in args.labeling.split(",")]
        elif g is not None:
            labeling = hypercube.find_hypercube_labeling(g, args.m)
            if labeling is None:
                raise PreconditionError(f"no {args.m}-cube in the positive graph")
        else:
            labeling = None
        schedule = hypercube.hypercube_schedule(args.m, labeling, g)
        _emit(hypercube.format_schedule(schedule), args.out)
        return 0
    if args.action == "verify":
        schedule = hypercube.load_schedule(args.schedule, args.n)
        if args.graph:
            schedule.check_host(load_graph(args.graph))
        res = hypercube.verify_schedule(schedule, alpha=args.alpha)
        _emit(_json({"ok": res.ok, "residual": res.residual, "length": len(schedule)}), args.out)
        return 0 if res.ok else EXIT_FAILED
    rep = hypercube.finite_time_necessary_checks(load_graph(args.graph), args.alpha)
    _emit(_json(rep._asdict()), args.out)
    return 0


COMMANDS = {"balance": cmd_balance, "analyze": cmd_analyze, "simulate": cmd_simulate,
            "montecarlo": cmd_montecarlo, "sweep": cmd_sweep, "hypercube": cmd_hypercube}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except GraphFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
