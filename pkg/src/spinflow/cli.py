"""Command line entry point: ``spinflow {flow,toy2d,verify,symbol}``.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, io
from .config import ConfigError, parse_config
from .flow import FlowConfig, IntegratorDiverged, run
from .toy2d import TOY_COLUMNS, ToyConfig, toy_run

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3
SYMBOL_COLUMNS = ("k", "lambda_h", "ratio", "deviation")


def _load(args, mode: str):
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    cfg = parse_config(text, args.overrides, mode=mode)
    expected = FlowConfig if mode == "flow" else ToyConfig
    if not isinstance(cfg, expected):
        raise ConfigError(f"config resolves to mode {type(cfg).__name__}, but subcommand is {mode!r}", "mode")
    return cfg


def cmd_flow(args) -> int:
    cfg = _load(args, "flow")
    try:
        res = run(cfg)
    except IntegratorDiverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    last = res.rows[-1]
    print(f"status={res.status} steps={res.state.step} t={res.state.t:.6g} energy={last.energy:.6g} "
          f"min_rho={last.min_rho:.3g} sup_C={res.sup_growth_constant:.4g}")
    return EXIT_OK


def cmd_toy2d(args) -> int:
    cfg = _load(args, "toy2d")
    start = datetime.now(timezone.utc).isoformat()
    outdir = Path(cfg.outdir) if cfg.outdir else None
    echo = {**vars(cfg), "dt": "cfl" if cfg.dt is None else cfg.dt, "outdir": cfg.outdir or ""}
    manifest = {**{f"config.{k}": v for k, v in echo.items()}, "version": __version__,
                "start_time": start, "end_time": "", "status": "running"}
    if outdir is not None:
        io.write_manifest(manifest, outdir / "manifest.txt")
    try:
        res = toy_run(cfg)
    except IntegratorDiverged as exc:
        if outdir is not None:
            manifest.update(end_time=datetime.now(timezone.utc).isoformat(), status=f"diverged({exc.step})")
            io.write_manifest(manifest, outdir / "manifest.txt")
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    last = res.rows[-1]
    if outdir is not None:
        io.write_table_csv(TOY_COLUMNS, res.rows, outdir / "diagnostics.csv")
        io.write_snapshot(res.u, res.grid, outdir / f"snap_{last['step']}.sghf")
        manifest.update(end_time=datetime.now(timezone.utc).isoformat(), status="completed",
                        steps=last["step"], t_final=last["t"])
        io.write_manifest(manifest, outdir / "manifest.txt")
    print(f"steps={last['step']} t={last['t']:.6g} linf_err={last['linf_err']:.4e} "
          f"l2_err={last['l2_err']:.4e} mass={last['mass']:.12g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify_suite

    return verify_suite(include_criteria=not args.quick)


def cmd_symbol(args) -> int:
    from .verify import symbol_sweep

    if args.n < 8 or any(k <= 0 for k in args.k):
        raise ConfigError("symbol sweep needs n >= 8 and positive wavenumbers")
    rows = symbol_sweep(args.n, tuple(args.k))
    if args.out:
        io.write_table_csv(SYMBOL_COLUMNS, rows, args.out)
    else:
        print(",".join(SYMBOL_COLUMNS))
        for r in rows:
            print(",".join(io.format_real(r[c]) for c in SYMBOL_COLUMNS))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, text in (("flow", cmd_flow, "run the spinor flow"),
                           ("toy2d", cmd_toy2d, "run the scalar toy model")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("overrides", nargs="*", metavar="key=value", help="overrides; these win over --config")
        p.set_defaults(func=fn)

    p = sub.add_parser("verify", help="run every property check and acceptance criterion")
    p.add_argument("--quick", action="store_true", help="module invariants only")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("symbol", help="principal-symbol ratio sweep as CSV")
    p.add_argument("--n", type=int, default=256, help="nodes per axis on the 2D grid")
    p.add_argument("--k", type=int, nargs="+", default=[8, 16, 32], help="probe wavenumbers")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_symbol)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
