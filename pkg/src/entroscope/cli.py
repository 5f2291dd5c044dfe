"""Command line interface.

Exit codes: 0 all checks passed, 1 a validation/verification check failed,
2 configuration or input-file error.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    build_report,
    emit_report,
    min_entropy_output,
    minimize_subspace,
    render_csv,
    render_json,
    run_additivity,
    run_phi_scan,
    run_singular_probe,
    run_validation,
)
from .matrices import load_matrix
from .subspaces import load_kraus, load_subspace, random_subspace


def _parse_int_tuple(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated integers, got {text!r}") from exc


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--dims", default="3,3", help="n1,m1[,n2,m2]")
    parser.add_argument("--subspace-dim", default="3", help="d1[,d2]")
    parser.add_argument("--tol-grad", type=float, default=1e-9)
    parser.add_argument("--out", default=None, help="report file path (stdout otherwise)")
    parser.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    parser.add_argument("--bits", action="store_true", help="display entropies in bits")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entroscope",
        description="Entanglement of subspaces, channel minimum entropy output, "
        "and derivative validation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the derivative and expansion validation suite")
    _common_flags(p)

    p = sub.add_parser("phi-scan", help="scan the weight subadditivity gap on a log grid")
    _common_flags(p)
    p.add_argument("--grid", type=int, default=200, help="total grid points per axis")

    p = sub.add_parser("additivity", help="local additivity sweep over random subspace pairs")
    _common_flags(p)
    p.add_argument("--trials", type=int, default=20)

    p = sub.add_parser("singular-probe", help="divergence and closed-form probes at singular states")
    _common_flags(p)
    p.add_argument("--trials", type=int, default=6, help="random rank-deficient cases")
    p.add_argument("--state", default=None, help="matrix JSON file with a singular state")
    p.add_argument("--direction", default=None, help="matrix JSON file with a direction")

    p = sub.add_parser("channel", help="minimum entropy output of a channel from a Kraus file")
    _common_flags(p)
    p.add_argument("--kraus", required=True, help="JSON list of Kraus operators")

    p = sub.add_parser("minimize", help="minimize the entanglement entropy over a subspace")
    _common_flags(p)
    p.add_argument("--subspace", default=None, help="subspace JSON file (random draw otherwise)")

    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        dims=_parse_int_tuple(args.dims, "--dims"),
        subspace_dims=_parse_int_tuple(args.subspace_dim, "--subspace-dim"),
        seed=args.seed,
        restarts=args.restarts,
        trials=getattr(args, "trials", 20),
        tol_grad=args.tol_grad,
        grid=getattr(args, "grid", 200),
        out=args.out,
        fmt=args.fmt,
        bits=args.bits,
    )


def _emit(config: ExperimentConfig, records: list[dict]) -> None:
    report = build_report(config, records)
    if config.out:
        emit_report(report, config.fmt, config.out)
    else:
        text = render_json(report) if config.fmt == "json" else render_csv(report)
        sys.stdout.write(text)


def _run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    if args.command == "validate":
        records, passed = run_validation(config)
        _emit(config, records)
        return 0 if passed else 1
    if args.command == "phi-scan":
        summary, rows, passed = run_phi_scan(config)
        _emit(config, rows if config.fmt == "csv" else [summary])
        return 0 if passed else 1
    if args.command == "additivity":
        records, passed = run_additivity(config)
        _emit(config, records)
        return 0 if passed else 1
    if args.command == "singular-probe":
        state = load_matrix(args.state) if args.state else None
        direction = load_matrix(args.direction) if args.direction else None
        records, passed = run_singular_probe(config, state, direction)
        _emit(config, records)
        return 0 if passed else 1
    if args.command == "channel":
        kraus = load_kraus(args.kraus)
        record, passed = min_entropy_output(kraus, config)
        _emit(config, [record])
        return 0 if passed else 1
    if args.command == "minimize":
        if args.subspace:
            space = load_subspace(args.subspace)
        else:
            (n1, m1), _ = config.factor_dims()
            d1, _ = config.factor_subspace_dims()
            space = random_subspace(n1, m1, d1, seed=[config.seed, 5])
        record = minimize_subspace(space, config)
        _emit(config, [record])
        return 0
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"entroscope: configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"entroscope: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
