"""Command-line entry point: ``motesim run | sweep | compare | report``.

Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .report import (CsvSchemaError, comparison_csv, grouped_bar_svg, read_run_csv,
                     rows_to_csv, run_summary, summarize_rows, sweep_csv, verdicts_to_csv,
                     write_json, write_text)
from .runner import CONDITIONS, InvariantViolation, compare, run, seeded, sweep
from .scenario import ConfigError, bundled_scenarios, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _load(args):
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be >= 0")
        cfg = seeded(cfg, args.seed)
    return cfg


def _list(text: str, conv=str) -> list:
    return [conv(x.strip()) for x in text.split(",") if x.strip()]


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run(cfg)
    out = Path(args.out)
    write_text(out / "run.csv", rows_to_csv(report.rows))
    write_text(out / "verdicts.csv", verdicts_to_csv(report))
    summary = run_summary(report)
    write_json(out / "summary.json", summary)
    if args.svg:
        write_text(out / "energy.svg", grouped_bar_svg(
            {"cumulative": report.energy.cumulative_mj},
            title=f"{cfg.name}: cumulative energy per node (mJ)"))
    print(f"{cfg.name} seed={cfg.seed}: network total {report.total_energy_mj:.3f} mJ, "
          f"{report.events} events, declared attackers {summary['declared_attackers']}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        counts = _list(args.counts, int)
    except ValueError:
        raise ConfigError("--counts", f"expected comma-separated integers, got {args.counts!r}")
    result = sweep(cfg, counts, workers=args.jobs)
    out = Path(args.out)
    write_text(out / "sweep.csv", sweep_csv(result))
    for n, r in zip(result.counts, result.reports):
        write_text(out / f"run_n{n}.csv", rows_to_csv(r.rows))
    write_json(out / "summary.json", {
        "scenario": cfg.name, "seed": cfg.seed, "counts": result.counts,
        "network_total_mj": result.totals, "strictly_increasing": result.strictly_increasing})
    if args.svg:
        write_text(out / "sweep.svg", grouped_bar_svg(
            {"network total": dict(zip(result.counts, result.totals))},
            title=f"{cfg.name}: network energy vs node count (mJ)"))
    for n, t in zip(result.counts, result.totals):
        print(f"n={n}: {t:.3f} mJ")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    result = compare(cfg, _list(args.conditions), svg=args.svg, workers=args.jobs)
    out = Path(args.out)
    for r in result.reports:
        write_text(out / f"{r.label}.csv", rows_to_csv(r.rows))
        if r.verdict_log:
            write_text(out / f"{r.label}_verdicts.csv", verdicts_to_csv(r))
    write_text(out / "comparison.csv", comparison_csv(result))
    comp = result.comparison
    write_json(out / "summary.json", {
        "scenario": cfg.name, "seed": cfg.seed, "conditions": result.conditions,
        "network_total_mj": comp.totals, "delta_vs_" + comp.reference: comp.total_deltas,
        "ordering": comp.ordering,
        "declared_attackers": {r.label: r.declared_attackers() for r in result.reports}})
    if result.svg is not None:
        write_text(out / "comparison.svg", result.svg)
    for lbl in result.conditions:
        print(f"{lbl}: {comp.totals[lbl]:.3f} mJ")
    print("ordering:", comp.ordering_text())
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        rows = read_run_csv(Path(args.csv).read_text())
    except FileNotFoundError:
        raise ConfigError("--csv", f"no such file: {args.csv}") from None
    except CsvSchemaError as e:
        raise ConfigError("--csv", str(e)) from None
    battery = load_scenario(args.scenario).battery if args.scenario else None
    summary = summarize_rows(rows, battery) if battery else summarize_rows(rows)
    out = Path(args.out)
    write_json(out / "report.json", {"nodes": {str(k): v for k, v in summary["nodes"].items()},
                                     "network_total_mj": summary["network_total_mj"]})
    if args.svg:
        write_text(out / "report.svg", grouped_bar_svg(
            {"cumulative": {n: v["cumulative_energy_mj"] for n, v in summary["nodes"].items()}},
            title="cumulative energy per node (mJ)"))
    for nid, v in summary["nodes"].items():
        life = "n/a" if v["lifetime_hours"] is None else f"{v['lifetime_hours']:.1f} h"
        print(f"node {nid} ({v['role']}): {v['cumulative_energy_mj']:.3f} mJ, "
              f"{v['avg_power_mw']:.4f} mW, lifetime {life}")
    print(f"network total: {summary['network_total_mj']:.3f} mJ")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motesim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        sp.add_argument("--scenario", required=scenario_required,
                        help=f"scenario JSON path or bundled name ({', '.join(bundled_scenarios())})")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--svg", action="store_true", help="also write an SVG chart")

    sp = sub.add_parser("run", help="run one scenario")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run the scenario for several grid sizes")
    common(sp)
    sp.add_argument("--counts", default="2,4,6,8", help="comma-separated grid node counts")
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="run baseline / attack / attack+ids on one seed")
    common(sp)
    sp.add_argument("--conditions", default=",".join(CONDITIONS),
                    help="comma-separated subset of " + ", ".join(CONDITIONS))
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("report", help="summarize an existing run CSV")
    common(sp, scenario_required=False)
    sp.add_argument("--csv", required=True, help="run CSV produced by 'run' or 'compare'")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
