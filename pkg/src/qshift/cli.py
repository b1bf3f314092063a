"""Command-line entry point ``sim``.

Exit codes: 0 success, 1 acceptance tolerance missed (repro-fig1),
2 configuration error, 3 round-solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    DEFAULT_SEED,
    build_problem,
    dump_distribution,
    fit_csv,
    n_sweep,
    render_csv,
    repro_fig1,
    run,
)
from .protocol import SolverError

log = logging.getLogger("qshift")


def _parse_ints(text: str) -> list[int]:
    text = text.strip()
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=6, help="TFIM chain length")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--t-min", type=float, default=0.02)
    p.add_argument("--t-max", type=float, default=0.4)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--linear", action="store_true", help="linearly spaced t grid")
    p.add_argument("--out", type=Path, default=None)


def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=None, help="Monte-Carlo samples (default: exact ensemble)")
    p.add_argument("--shots", type=int, default=None, help="shots per sampled circuit")


def _config_from_flags(args, protocol: dict) -> ExperimentConfig:
    mode: dict = {"kind": "ensemble"}
    if getattr(args, "samples", None):
        mode = {"kind": "monte_carlo", "samples": args.samples}
        if args.shots:
            mode["measurement"] = {"shots": args.shots}
    return load_config(
        {
            "model": {"kind": "tfim", "n": args.n, "J": args.J, "h": args.h},
            "seed": args.seed,
            "protocol": protocol,
            "t_grid": {"min": args.t_min, "max": args.t_max, "count": args.count, "log_spaced": not args.linear},
            "mode": mode,
        }
    )


def _emit(config: ExperimentConfig, out: Path | None) -> int:
    path, rows = run(config, out)
    if path is None:
        sys.stdout.write(render_csv(config, rows))
    else:
        log.info("wrote %d rows to %s", len(rows), path)
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
        config = load_config(json.loads(config.model_dump_json()))
    return _emit(config, args.out)


def cmd_trotter(args) -> int:
    return _emit(_config_from_flags(args, {"kind": "trotter", "order": args.order, "N": args.N}), args.out)


def cmd_qdrift(args) -> int:
    return _emit(_config_from_flags(args, {"kind": "qdrift", "N": args.N}), args.out)


def cmd_qshift(args) -> int:
    protocol: dict = {"kind": "qshift", "N": args.N}
    if args.schedule:
        protocol["schedule"] = _parse_ints(args.schedule)
    else:
        protocol["r"] = args.r
    return _emit(_config_from_flags(args, protocol), args.out)


def cmd_sweep(args) -> int:
    Ns = _parse_ints(args.N)
    if not Ns:
        raise ConfigError("--N needs at least one value")
    config = _config_from_flags(args, {"kind": "qshift", "N": Ns[0], "r": args.r})
    report = n_sweep(build_problem(config), args.t, args.r, Ns)
    report["seed"] = config.seed
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_repro(args) -> int:
    summary = repro_fig1(args.out_dir, seed=args.seed)
    for name, res in summary["protocols"].items():
        status = "PASS" if res["pass"] else "FAIL"
        print(
            f"{status} {name}: exponent {res['exponent']:.3f} "
            f"(expected {res['expected_exponent']} +/- {res['tolerance']}), R^2 {res['r_squared']:.4f}"
        )
    return 0 if summary["all_pass"] else 1


def cmd_fit(args) -> int:
    fit = fit_csv(args.inp, args.t_min, args.t_max)
    print(json.dumps(fit.to_dict(), indent=2))
    return 0


def cmd_dump(args) -> int:
    config = load_config(args.config)
    history = [a - 1 for a in _parse_ints(args.history)]
    text = json.dumps(dump_distribution(config, args.round, history), indent=2) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Stochastic Hamiltonian-simulation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("repro-fig1", help="reproduce the TFIM error-scaling benchmark")
    p.add_argument("--out-dir", type=Path, default=Path("fig1"))
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("fit", help="power-law fit of abs_error vs t from a result CSV")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("dump-dist", help="print one solved round distribution as JSON")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--round", type=int, required=True)
    p.add_argument("--history", default="", help="1-based term indices drawn so far, comma separated")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("trotter", help="product-formula sweep on the TFIM")
    _add_common(p)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--N", type=int, default=1, help="folds")
    p.set_defaults(func=cmd_trotter)

    p = sub.add_parser("qdrift", help="qDRIFT sweep on the TFIM")
    _add_common(p)
    _add_sampling(p)
    p.add_argument("--N", type=int, default=2)
    p.set_defaults(func=cmd_qdrift)

    p = sub.add_parser("qshift", help="qSHIFT sweep on the TFIM")
    _add_common(p)
    _add_sampling(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--schedule", default=None, help="comma-separated draws per round (overrides --r)")
    p.set_defaults(func=cmd_qshift)

    p = sub.add_parser("sweep", help="qSHIFT algorithmic error versus N at fixed t")
    _add_common(p)
    p.add_argument("--t", type=float, default=0.2)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--N", default="2,4,8")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(
            f"solver failure: {exc} [round={exc.round} history={list(exc.history)} residual={exc.residual}]",
            file=sys.stderr,
        )
        return 3
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
