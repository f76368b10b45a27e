"""Command line entry point: ``patrolgame {gen,frontier,payoff,scale,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, PatrolGameError, ResourceLimitError
from ..instance import UtilitySpec, generate_random_instance, load_instance, load_sites_csv
from ..oracle import best_response_empirical, default_t_max
from ..report import Visibility, normalize
from . import runner
from .config import generator_from_json, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

log = logging.getLogger("patrolgame")


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _sibling(path: Path | None, suffix: str) -> Path | None:
    if path is None:
        return None
    return path.with_name(path.stem + suffix)


def cmd_gen(args) -> int:
    if args.n is not None and args.n < 1:
        raise ConfigError(f"--n must be >= 1, got {args.n}")
    spec = UtilitySpec(degree=args.degree)
    if args.csv:
        inst = load_sites_csv(args.csv, spec, args.seed, args.penalty)
    else:
        inst = generate_random_instance(args.n, args.side, args.seed, spec, args.penalty)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    inst.save(out)
    print(inst.summary())
    return EXIT_OK


def _errors(rows) -> bool:
    return any(r.get("error") for r in rows)


def _output(args, cfg) -> Path | None:
    return Path(args.out) if args.out else cfg.output


def cmd_frontier(args) -> int:
    cfg = load_config(args.config)
    rows = runner.frontier(cfg)
    _write(runner.to_csv(runner.FRONTIER_COLUMNS, rows), _output(args, cfg))
    return EXIT_RESOURCE if _errors(rows) else EXIT_OK


def cmd_payoff(args) -> int:
    cfg = load_config(args.config)
    rows, best = runner.payoff_sweep(cfg)
    out = _output(args, cfg)
    _write(runner.to_csv(runner.PAYOFF_COLUMNS, rows), out)
    best_csv = runner.to_csv(runner.BEST_COLUMNS, best)
    if out is None:
        sys.stdout.write("\n" + best_csv)
    else:
        _write(best_csv, _sibling(out, "_best.csv"))
    return EXIT_RESOURCE if _errors(rows) else EXIT_OK


def cmd_scale(args) -> int:
    cfg = load_config(args.config)
    rows, times = runner.scalability(cfg)
    out = _output(args, cfg)
    _write(runner.to_csv(runner.SCALE_COLUMNS, rows), out)
    timing = json.dumps(times, indent=1) + "\n"
    if out is None:
        sys.stderr.write(timing)
    else:
        _write(timing, _sibling(out, "_times.json"))
    return EXIT_RESOURCE if _errors(rows) else EXIT_OK


def cmd_eval(args) -> int:
    inst = load_instance(args.instance)
    g = generator_from_json(inst, args.generator)
    model = Visibility.parse(args.model)
    t_max = args.t_max or default_t_max(inst)
    horizon = args.horizon or max(10 * t_max, 25 * inst.n * max(inst.diameter, 1))
    H = inst.utilities
    penalty = inst.penalty if args.penalty is None else args.penalty
    rep = best_response_empirical(g, model, H, penalty, horizon, args.samples, t_max, args.seed)
    zeta = runner.bgt_zetas(inst, (model,), horizon, t_max).get(model.value)
    if zeta is not None:
        rep = normalize(rep, zeta)
    _write(rep.to_json() + "\n", Path(args.out) if args.out else None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patrolgame", description="Patrol security game simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate or import an instance and write it as JSON")
    g.add_argument("--n", type=int, default=30, help="number of sites (random instances)")
    g.add_argument("--side", type=float, default=1000.0, help="side of the square the sites are drawn in")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--degree", type=int, default=0, help="utility polynomial degree")
    g.add_argument("--penalty", type=float, default=0.0)
    g.add_argument("--csv", help="read sites from a CSV (id,x,y[,c0,...]) instead of drawing them")
    g.add_argument("--out", default="instance.json")
    g.set_defaults(func=cmd_gen)

    for name, fn, text in (
        ("frontier", cmd_frontier, "EMR and entropy rate per generator and alpha"),
        ("payoff", cmd_payoff, "attacker payoff sweep over generators, alphas, models and penalties"),
        ("scale", cmd_scale, "normalised payoff against instance size"),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("config", help="experiment config (.json or .toml)")
        s.add_argument("--out", help="CSV output path (default: config 'output' or stdout)")
        s.set_defaults(func=fn)

    e = sub.add_parser("eval", help="best response against a single generator")
    e.add_argument("instance", help="instance JSON")
    e.add_argument("--generator", required=True, help='JSON, e.g. \'{"kind": "tspb", "alpha": 0.5, "seed": 1}\'')
    e.add_argument("--model", default="full", choices=[m.value for m in Visibility])
    e.add_argument("--penalty", type=float, default=None, help="defaults to the instance penalty")
    e.add_argument("--horizon", type=int, default=None)
    e.add_argument("--samples", type=int, default=10)
    e.add_argument("--t-max", type=int, default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.n < 1:
        parser.error(f"--n must be >= 1, got {args.n}")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PatrolGameError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
