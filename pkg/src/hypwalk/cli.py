"""``hypwalk`` command line.

Exit codes: 0 success (or certified), 2 certificate criterion failed
(``certify`` only), 1 usage, input or numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from ._parallel import default_workers
from .certifier import criterion_check, verify_certificate_bruteforce
from .errors import HypwalkError, UsageError
from .experiments import (CURVE_HEADER, DECAY_HEADER, TAILS_HEADER, ExperimentConfig, default_l_schedule,
                          fixed_l_schedule, gromov_tail_stats, parse_csv_columns, probability_curve,
                          rows_to_csv, shadow_decay_curve)
from .geometry import default_sampler, estimate_delta
from .model_spaces import ModelSpace, make_space, read_generators
from .plotting import plot_columns, plot_csv
from .random_walk import Measure, estimate_drift, read_measure, sample_path, uniform_symmetric

PROG = "hypwalk"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for a failed certificate
    def error(self, message: str):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_common(p: argparse.ArgumentParser, seed_help: str = "master seed (required, no default)") -> None:
    p.add_argument("--config", type=Path, default=None, help="key=value file (or JSON object) of flag defaults")
    p.add_argument("--space", choices=("tree", "plane"), default="tree", help="model space (default: tree)")
    p.add_argument("--rank", type=int, default=2, help="free group rank for --space tree (default: 2)")
    p.add_argument("--delta", type=float, default=None,
                   help="hyperbolicity constant (default: 0 on the tree; estimated on the plane)")
    p.add_argument("--seed", type=int, default=None, help=seed_help)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $HYPWALK_THREADS or CPU count)")


def _add_measure(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measure", type=Path, default=None,
                   help="measure file '<element> <probability>' (default: uniform symmetric on the tree)")


def _add_delta_estimation(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quadruples", type=int, default=100000,
                   help="quadruples sampled when estimating delta (default: 100000)")
    p.add_argument("--safety", type=float, default=1.5, help="safety factor on estimated delta (default: 1.5)")
    p.add_argument("--radius", type=float, default=20.0,
                   help="sampling radius around the basepoint for delta estimation (default: 20)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Random walks, ping-pong certificates and Monte Carlo "
                                            "experiments for groups acting on hyperbolic spaces.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("certify", help="check the Gromov-product criterion for a generator set")
    _add_common(p, seed_help="seed for estimating delta on the plane (default: none)")
    p.add_argument("--generators", type=Path, default=None, help="generator file, one element per line (required, no default)")
    p.add_argument("--verify", type=int, default=0, metavar="B",
                   help="also brute-force verify all words of length <= B (default: 0, off)")
    _add_delta_estimation(p)

    p = sub.add_parser("walk", help="print one sample path")
    _add_common(p)
    _add_measure(p)
    p.add_argument("--n", type=int, default=10, help="number of steps (default: 10)")

    p = sub.add_parser("drift", help="estimate the drift of a random walk")
    _add_common(p)
    _add_measure(p)
    p.add_argument("--n", type=int, default=10000, help="steps per trial (default: 10000)")
    p.add_argument("--trials", type=int, default=200, help="number of walks (default: 200)")

    p = sub.add_parser("delta", help="estimate the four-point hyperbolicity constant by sampling")
    _add_common(p)
    _add_delta_estimation(p)

    p = sub.add_parser("curve", help="probability that Gamma(n) is certified, per n")
    _add_common(p)
    _add_measure(p)
    _add_delta_estimation(p)
    p.add_argument("--k", type=int, default=2, help="number of independent walks (default: 2)")
    p.add_argument("--n", type=_int_list, default=[4, 8, 16, 32, 64, 100],
                   help="comma-separated step counts (default: 4,8,16,32,64,100)")
    p.add_argument("--trials", type=int, default=1000, help="trials per n (default: 1000)")
    p.add_argument("--out", type=Path, default=None, help="CSV output path (default: stdout)")
    p.add_argument("--figure", type=Path, default=None, help="also render p_hat against n to this file (default: no figure)")

    p = sub.add_parser("tails", help="tail probabilities of Gromov products of walk endpoints")
    _add_common(p)
    _add_measure(p)
    p.add_argument("--n", type=_int_list, default=[100], help="comma-separated step counts (default: 100)")
    p.add_argument("--trials", type=int, default=1000, help="trials per n (default: 1000)")
    p.add_argument("--l", type=int, default=None, help="fixed threshold l(n) (default: schedule from drift)")
    p.add_argument("--drift", type=float, default=None,
                   help="drift used by the default l(n) schedule (default: estimated)")
    p.add_argument("--out", type=Path, default=None, help="CSV output path (default: stdout)")
    p.add_argument("--figure", type=Path, default=None, help="also render p_hat against n to this file (default: no figure)")

    p = sub.add_parser("shadow-decay", help="empirical decay of shadow measures with distance parameter")
    _add_common(p)
    _add_measure(p)
    p.add_argument("--n", type=int, default=50, help="walk length (default: 50)")
    p.add_argument("--r", type=_float_list, default=[5.0, 10.0, 15.0, 20.0],
                   help="comma-separated distance parameters (default: 5,10,15,20)")
    p.add_argument("--shadows", type=int, default=200, help="shadows sampled (default: 200)")
    p.add_argument("--samples", type=int, default=500, help="walks per shadow (default: 500)")
    p.add_argument("--reflected", action="store_true", help="measure shadows with the reflected walk (default: off)")
    p.add_argument("--out", type=Path, default=None, help="CSV output path (default: stdout)")
    p.add_argument("--figure", type=Path, default=None, help="also render f_hat against r to this file (default: no figure)")

    p = sub.add_parser("plot", help="render CSV columns as a line chart (SVG, PNG or PDF by suffix)")
    p.add_argument("--config", type=Path, default=None, help="key=value file (or JSON object) of flag defaults")
    p.add_argument("--in", dest="in_csv", type=Path, default=None, help="input CSV (required, no default)")
    p.add_argument("--out", type=Path, default=None, help="output figure path, format from the suffix (required, no default)")
    p.add_argument("--x", default="n", help="x column (default: n)")
    p.add_argument("--y", default="p_hat", help="y column (default: p_hat)")
    p.add_argument("--err", default=None, help="error-bar column (default: none)")
    p.add_argument("--group", default=None, help="column splitting rows into separate lines (default: none)")
    p.add_argument("--title", default=None, help="figure title (default: none)")
    return parser


# ----------------------------------------------------------------------------
# config handling


def _read_config(path: Path) -> dict[str, str]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON config {path}: {exc}") from exc
        return {str(k).replace("-", "_"): v if isinstance(v, (str, bool)) else
                (",".join(map(str, v)) if isinstance(v, list) else str(v)) for k, v in data.items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    sub = _subparser(parser, args.command)
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in _read_config(args.config).items():
        if key == "in":
            key = "in_csv"
        if key not in dests or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = dests[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = str(value).lower() in ("1", "true", "yes", "on")
        elif action.type is not None and isinstance(value, str):
            try:
                defaults[key] = action.type(value)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        else:
            defaults[key] = value
    # flags given on the command line still win over the config file
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ----------------------------------------------------------------------------
# commands


def _space(args) -> ModelSpace:
    return make_space(args.space, args.rank, args.delta)


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} needs --seed")
    return args.seed


def _workers(args) -> int:
    return args.threads if args.threads else default_workers()


def _measure(args, space: ModelSpace) -> Measure:
    if args.measure is not None:
        return read_measure(args.measure, space)
    if space.kind == "tree":
        return uniform_symmetric(args.rank)
    raise UsageError("--measure is required on the plane")


def _delta(args, space: ModelSpace, out) -> float:
    if args.delta is not None:
        if args.delta < 0:
            raise UsageError("--delta must be >= 0")
        return args.delta
    if space.kind == "tree":
        return 0.0
    if args.seed is None:
        raise UsageError("on the plane pass --delta, or --seed to estimate it")
    est = estimate_delta(space, default_sampler(space, args.radius), args.quadruples, args.safety, args.seed)
    print(f"# delta_hat={est.delta_hat:.12g} quadruples={est.quadruples_sampled} "
          f"safety={est.safety_factor:g} delta_used={est.delta_used:.12g}", file=out)
    return est.delta_used


def _emit_csv(text: str, path: Optional[Path], out) -> None:
    if path is None:
        out.write(text)
    else:
        path.write_text(text)


def cmd_certify(args, out) -> int:
    space = _space(args)
    if args.generators is None:
        raise UsageError("certify needs --generators")
    gens = read_generators(args.generators, space)
    delta = _delta(args, space, sys.stderr)
    result = criterion_check(gens, space, delta)
    out.write(result.to_text())
    if not result.certified:
        return 2
    if args.verify:
        rep = verify_certificate_bruteforce(gens, space, result, args.verify)
        out.write(f"verified_words: {rep.words_checked}\nverified_max_len: {rep.max_len}\n"
                  f"verified_ratio_range: {rep.min_ratio:.12g} {rep.max_ratio:.12g}\n")
    return 0


def cmd_walk(args, out) -> int:
    space = _space(args)
    mu = _measure(args, space)
    path = sample_path(mu, args.n, _require_seed(args))
    out.write(f"# seed={path.seed}\n")
    out.write("i,increment,position,displacement\n")
    out.write(f"0,,{space.format_element(path.positions[0])},0\n")
    for i, (g, w) in enumerate(zip(path.increments, path.positions[1:]), 1):
        out.write(f"{i},{space.format_element(g)},{space.format_element(w)},{space.displacement(w):.12g}\n")
    return 0


def cmd_drift(args, out) -> int:
    space = _space(args)
    mu = _measure(args, space)
    est = estimate_drift(mu, space, args.n, args.trials, _require_seed(args), _workers(args))
    out.write(f"L_hat: {est.L_hat:.6f}\nstderr: {est.stderr:.6f}\nn: {est.n}\ntrials: {est.trials}\n")
    return 0


def cmd_delta(args, out) -> int:
    space = _space(args)
    if args.quadruples < 1 or args.safety < 1:
        raise UsageError("need --quadruples >= 1 and --safety >= 1")
    est = estimate_delta(space, default_sampler(space, args.radius), args.quadruples, args.safety,
                         _require_seed(args))
    out.write(f"delta_hat: {est.delta_hat:.12g}\nquadruples_sampled: {est.quadruples_sampled}\n"
              f"safety_factor: {est.safety_factor:g}\ndelta_used: {est.delta_used:.12g}\n")
    return 0


def _config(args, space: ModelSpace, n_grid, k: int = 1, delta: Optional[float] = None,
            trials: Optional[int] = None) -> ExperimentConfig:
    return ExperimentConfig(space=space, measure=_measure(args, space), k=k, n_grid=tuple(n_grid),
                            trials=trials or args.trials, master_seed=_require_seed(args), delta=delta,
                            workers=_workers(args))


def cmd_curve(args, out) -> int:
    space = _space(args)
    _require_seed(args)
    delta = _delta(args, space, sys.stderr)
    cfg = _config(args, space, args.n, args.k, delta)
    text = rows_to_csv(probability_curve(cfg), CURVE_HEADER)
    _emit_csv(text, args.out, out)
    if args.figure is not None:
        _plot_rows(text, args.figure, "n", "p_hat", "stderr", None, title=f"k={args.k}, {args.space}")
    return 0


def _plot_rows(csv_text: str, figure: Path, x: str, y: str, err: Optional[str], group: Optional[str],
               title: Optional[str] = None) -> None:
    plot_columns(parse_csv_columns(csv_text), figure, x, y, err, group, title)


def cmd_tails(args, out) -> int:
    space = _space(args)
    seed = _require_seed(args)
    cfg = _config(args, space, args.n)
    if args.l is not None:
        schedule = fixed_l_schedule(args.l)
    else:
        L = args.drift
        if L is None:
            L = estimate_drift(cfg.measure, space, 1000, 100, seed, cfg.workers).L_hat
        schedule = lambda n: default_l_schedule(n, L)  # noqa: E731
    rows = gromov_tail_stats(cfg, schedule)
    text = rows_to_csv(rows, TAILS_HEADER)
    _emit_csv(text, args.out, out)
    if args.figure is not None:
        _plot_rows(text, args.figure, "n", "p_hat", "stderr", "case")
    return 0


def cmd_shadow_decay(args, out) -> int:
    space = _space(args)
    cfg = _config(args, space, [args.n], trials=args.shadows)
    rows = shadow_decay_curve(cfg, args.r, shadows=args.shadows, samples=args.samples, n=args.n,
                              reflected=args.reflected)
    text = rows_to_csv(rows, DECAY_HEADER)
    _emit_csv(text, args.out, out)
    if args.figure is not None:
        _plot_rows(text, args.figure, "r", "f_hat", None, None)
    return 0


def cmd_plot(args, out) -> int:
    if args.in_csv is None or args.out is None:
        raise UsageError("plot needs --in and --out")
    plot_csv(args.in_csv, args.out, args.x, args.y, args.err, args.group, args.title)
    return 0


COMMANDS = {
    "certify": cmd_certify,
    "walk": cmd_walk,
    "drift": cmd_drift,
    "delta": cmd_delta,
    "curve": cmd_curve,
    "tails": cmd_tails,
    "shadow-decay": cmd_shadow_decay,
    "plot": cmd_plot,
}


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = _parse(list(sys.argv[1:] if argv is None else argv))
        return COMMANDS[args.command](args, out)
    except HypwalkError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
