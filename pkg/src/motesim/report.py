"""CSV emission/parsing and dependency-free SVG charts."""
from __future__ import annotations

import csv
import io
import json
from html import escape
from pathlib import Path
from typing import TYPE_CHECKING

from .energy import PowertraceCounters, estimate_lifetime, BatteryModel

if TYPE_CHECKING:
    from .runner import CompareResult, RunReport, SnapshotRow, SweepResult

CSV_COLUMNS = ["time_s", "node_id", "role", "cpu_ticks", "lpm_ticks", "tx_ticks", "rx_ticks",
               "interval_energy_mj", "cumulative_energy_mj", "verdict_state", "suspicion_p"]
VERDICT_COLUMNS = ["time_s", "round", "node_id", "state", "suspicion_p", "victims"]
VERDICT_STATES = ("Clean", "Suspected", "Attacker")


class CsvSchemaError(ValueError):
    pass


def _f(x: float) -> str:
    return f"{x:.6f}"


def _write(rows: list[list[str]], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def rows_to_csv(rows: list[SnapshotRow]) -> str:
    return _write([[_f(r.time_s), str(r.node_id), r.role, str(r.counters.cpu),
                    str(r.counters.lpm), str(r.counters.tx), str(r.counters.rx),
                    _f(r.interval_energy_mj), _f(r.cumulative_energy_mj), r.verdict_state,
                    _f(r.suspicion_p)] for r in rows], CSV_COLUMNS)


def verdicts_to_csv(report: RunReport) -> str:
    return _write([[_f(v.declared_at / 32768), str(v.round), str(v.node), v.state, _f(v.p),
                    " ".join(str(x) for x in v.victims)] for v in report.verdict_log],
                  VERDICT_COLUMNS)


def read_run_csv(text: str) -> list[dict]:
    """Parse a run CSV, checking column set, types, states and monotone time."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvSchemaError("empty CSV") from None
    if header != CSV_COLUMNS:
        raise CsvSchemaError(f"unexpected header {header}")
    out = []
    last_t = 0.0
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(CSV_COLUMNS):
            raise CsvSchemaError(f"line {lineno}: expected {len(CSV_COLUMNS)} columns")
        try:
            row = {
                "time_s": float(rec[0]), "node_id": int(rec[1]), "role": rec[2],
                "cpu_ticks": int(rec[3]), "lpm_ticks": int(rec[4]), "tx_ticks": int(rec[5]),
                "rx_ticks": int(rec[6]), "interval_energy_mj": float(rec[7]),
                "cumulative_energy_mj": float(rec[8]), "verdict_state": rec[9],
                "suspicion_p": float(rec[10]),
            }
        except ValueError as e:
            raise CsvSchemaError(f"line {lineno}: {e}") from None
        if row["verdict_state"] not in VERDICT_STATES:
            raise CsvSchemaError(f"line {lineno}: bad verdict state {rec[9]!r}")
        if row["time_s"] < last_t:
            raise CsvSchemaError(f"line {lineno}: time goes backwards")
        last_t = row["time_s"]
        out.append(row)
    return out


def summarize_rows(rows: list[dict], battery: BatteryModel = BatteryModel()) -> dict:
    """Final cumulative energy, average power and projected lifetime per node."""
    final: dict[int, dict] = {}
    for row in rows:
        final[row["node_id"]] = row
    nodes = {}
    for nid in sorted(final):
        row = final[nid]
        avg_mw = row["cumulative_energy_mj"] / row["time_s"]
        nodes[nid] = {
            "role": row["role"],
            "cumulative_energy_mj": row["cumulative_energy_mj"],
            "avg_power_mw": avg_mw,
            "lifetime_hours": estimate_lifetime(avg_mw, battery) if avg_mw > 0 else None,
        }
    total = sum(n["cumulative_energy_mj"] for n in nodes.values())
    return {"nodes": nodes, "network_total_mj": total}


def run_summary(report: RunReport) -> dict:
    return {
        "scenario": report.config.name,
        "label": report.label,
        "seed": report.config.seed,
        "duration_s": report.config.duration,
        "events": report.events,
        "network_total_mj": report.total_energy_mj,
        "nodes": {str(n): {"cumulative_energy_mj": report.energy.cumulative_mj[n],
                           "lifetime_hours": report.lifetime_hours[n]}
                  for n in sorted(report.energy.cumulative_mj)},
        "ids_rounds": report.ids_rounds,
        "declared_attackers": report.declared_attackers(),
    }


def comparison_csv(result: CompareResult) -> str:
    comp = result.comparison
    rows = []
    for r in result.reports:
        for nid in sorted(r.energy.cumulative_mj):
            rows.append([r.label, str(nid), _f(r.energy.cumulative_mj[nid]),
                         _f(comp.node_deltas[r.label][nid])])
        rows.append([r.label, "total", _f(comp.totals[r.label]), _f(comp.total_deltas[r.label])])
    return _write(rows, ["condition", "node_id", "cumulative_energy_mj", "delta_vs_" + comp.reference])


def sweep_csv(result: SweepResult) -> str:
    return _write([[str(n), _f(t)] for n, t in zip(result.counts, result.totals)],
                  ["node_count", "network_total_mj"])


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_json(path: Path, data: dict) -> Path:
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- SVG ----------------------------------------------------------------------

PALETTE = ["#6c757d", "#dc3545", "#0d6efd", "#198754", "#fd7e14", "#6f42c1"]


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** len(str(int(v))) / 10
    for step in (1, 2, 2.5, 5, 10):
        if v <= step * mag:
            return step * mag
    return 10 * mag


def grouped_bar_svg(series: dict[str, dict[int, float]], title: str = "",
                    width: int = 760, height: int = 380) -> str:
    """One group per node, one bar per series."""
    labels = list(series)
    nodes = sorted({n for s in series.values() for n in s})
    left, right, top, bottom = 70, 20, 40, 60
    pw, ph = width - left - right, height - top - bottom
    vmax = _nice_max(max((v for s in series.values() for v in s.values()), default=1.0))
    group_w = pw / max(1, len(nodes))
    bar_w = group_w * 0.8 / max(1, len(labels))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
           f'width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
           f'<title>{escape(title)}</title>',
           f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for i in range(5):
        v = vmax * i / 4
        y = top + ph - ph * i / 4
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#e9ecef"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{v:g}</text>')
    for gi, nid in enumerate(nodes):
        gx = left + gi * group_w + group_w * 0.1
        for si, lbl in enumerate(labels):
            v = series[lbl].get(nid, 0.0)
            h = ph * v / vmax
            out.append(f'<rect x="{gx + si * bar_w:.1f}" y="{top + ph - h:.1f}" '
                       f'width="{bar_w:.1f}" height="{h:.1f}" fill="{PALETTE[si % len(PALETTE)]}">'
                       f'<title>{escape(lbl)} node {nid}: {v:.3f} mJ</title></rect>')
        out.append(f'<text x="{left + gi * group_w + group_w / 2:.1f}" y="{top + ph + 16}" '
                   f'text-anchor="middle">{nid}</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#212529"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 28}" text-anchor="middle">node</text>')
    for si, lbl in enumerate(labels):
        lx = left + si * 150
        out.append(f'<rect x="{lx}" y="{height - 16}" width="10" height="10" '
                   f'fill="{PALETTE[si % len(PALETTE)]}"/>')
        out.append(f'<text x="{lx + 14}" y="{height - 7}">{escape(lbl)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def counters_from_row(row: dict) -> PowertraceCounters:
    return PowertraceCounters(row["cpu_ticks"], row["lpm_ticks"], row["tx_ticks"], row["rx_ticks"])
