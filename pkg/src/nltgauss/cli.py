"""Command-line entry point: ``nltgauss {sweep,verify,plot,preset}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment as ex
from .verify import CHECKS, run_check


def _cmd_sweep(args) -> int:
    try:
        cfg = ex.resolve_config(args.config).with_overrides(args.seed, args.samples)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else ex.default_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ex.run_sweep(cfg)
    if args.format == "json":
        path = out_dir / (Path(cfg.csv_name).stem + ".json")
        path.write_text(ex.to_json(cfg, rows), encoding="utf-8")
    else:
        path = out_dir / cfg.csv_name
        path.write_text(ex.to_csv(cfg, rows), encoding="utf-8")
        if cfg.plot_name and not args.no_plot:
            from .plotting import emit_plot

            emit_plot(path, cfg.plot_kind, out_dir / cfg.plot_name)
    failed = [r for r in rows if any(f.startswith("error:") for f in r.flags)]
    for r in failed:
        print(f"warning: {r.sweep_variable}={r.sweep_value} {r.g}: {r.flags}", file=sys.stderr)
    print(path)
    return 0


def _cmd_verify(args, parser) -> int:
    names = list(CHECKS) if args.all else args.names
    if not names:
        parser.error("verify: give check names or --all")
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        parser.error(f"verify: unknown check(s) {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    ok = True
    for name in names:
        report = run_check(name, args.seed, args.samples)
        ok &= report.as_expected
        print(json.dumps(report.to_json(), sort_keys=True, default=float), flush=True)
    return 0 if ok else 1


def _cmd_plot(args) -> int:
    from .plotting import emit_plot

    try:
        path = emit_plot(args.csv, args.kind, args.out)
    except (ex.ConfigError, ValueError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


def _cmd_preset(args) -> int:
    if args.action == "list":
        for name in ex.preset_names():
            cfg = ex.load_config(ex.preset_text(name))
            print(f"{name}\t{cfg.raw.get('description', '')}")
        return 0
    try:
        sys.stdout.write(ex.preset_text(args.name))
    except ex.ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nltgauss", description="Linear-regression gains of memoryless nonlinearities.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a config or preset sweep and write CSV/JSON (+ plot)")
    s.add_argument("--config", required=True, help="YAML config path or preset name")
    s.add_argument("--seed", type=int, help="override engine seed")
    s.add_argument("--samples", type=int, help="override Monte Carlo sample count")
    s.add_argument("--out", help=f"output directory (default ${ex.OUT_DIR_ENV} or .)")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--no-plot", action="store_true", help="skip the plot file")

    v = sub.add_parser("verify", help="run theorem checkers; JSON lines on stdout")
    v.add_argument("names", nargs="*", help="check names (see --list)")
    v.add_argument("--all", action="store_true")
    v.add_argument("--list", action="store_true", help="list check names and exit")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, help="override Monte Carlo sample count")

    pl = sub.add_parser("plot", help="plot a sweep CSV")
    pl.add_argument("csv")
    pl.add_argument("--kind", choices=("gains", "capacity"), default="gains")
    pl.add_argument("--out", help="output image path (default: CSV name with .png)")

    pr = sub.add_parser("preset", help="list or show shipped presets")
    pr_sub = pr.add_subparsers(dest="action", required=True)
    pr_sub.add_parser("list")
    show = pr_sub.add_parser("show")
    show.add_argument("name")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "verify":
        if args.list:
            for name, chk in CHECKS.items():
                tag = " (expected failure)" if chk.expected_failure else ""
                print(f"{name}{tag}\t{chk.description}")
            return 0
        return _cmd_verify(args, parser)
    if args.command == "plot":
        return _cmd_plot(args)
    return _cmd_preset(args)


if __name__ == "__main__":
    sys.exit(main())
