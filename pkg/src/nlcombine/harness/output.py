"""Report tables, forecast CSVs and SVG forecast diagrams."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..errors import SizeError

PALETTE = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#17becf")


def write_atomic(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "MAPE", "MSE", "ARV"])
    for row in report.rows:
        if row.ok:
            e = row.errors
            writer.writerow([row.name, repr(e.mape), repr(e.mse), repr(e.arv)])
        else:
            writer.writerow([row.name, "nan", "nan", "nan"])
    for note in report.notes:
        buf.write(f"# {note}\n")
    for row in report.rows:
        if not row.ok:
            buf.write(f"# {row.name}: {row.status}\n")
    return buf.getvalue()


def report_table(report) -> str:
    header = ("model", "MAPE", "MSE", "ARV", "val SSE")
    body = []
    for row in report.rows:
        if row.ok:
            e = row.errors
            body.append((row.name, f"{e.mape:.6f}", f"{e.mse:.6g}", f"{e.arv:.6f}",
                         f"{row.validation_sse:.6g}"))
        else:
            body.append((row.name, "failed", "", "", ""))
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]

    def fmt(cells):
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    rule = "-" * len(fmt(header))
    lines = [f"Forecasting results: {report.dataset} (test window)", rule, fmt(header), rule]
    models = [fmt(c) for c, r in zip(body, report.rows) if r.kind == "model"]
    combos = [fmt(c) for c, r in zip(body, report.rows) if r.kind == "combiner"]
    lines += models
    if combos:
        lines += [rule, *combos]
    lines.append(rule)
    for key, value in report.settings.items():
        lines.append(f"{key}: {value}")
    for key, value in report.selected.items():
        lines.append(f"selected {key}: {value}")
    for note in report.notes:
        lines.append(f"note: {note}")
    for row in report.rows:
        if not row.ok:
            lines.append(f"{row.name}: {row.status}")
    return "\n".join(lines) + "\n"


def emit_report(report, path, fmt: str = "csv") -> Path:
    """Write the results table as CSV (``model,MAPE,MSE,ARV``) or an aligned text table."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt in ("table", "text-table"):
        text = report_table(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return write_atomic(path, text)


def read_report_csv(path) -> dict:
    """Parse an emitted CSV report back into ``{model: (MAPE, MSE, ARV)}``."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    next(reader)
    return {r[0]: tuple(float(v) for v in r[1:4]) for r in reader if r}


def forecast_long_csv(actual: Sequence[float], forecasts: Mapping[str, Sequence[float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "series", "value"])
    for name, values in [("actual", actual), *forecasts.items()]:
        for k, v in enumerate(values):
            writer.writerow([k, name, repr(float(v))])
    return buf.getvalue()


def forecast_svg(actual: Sequence[float], forecasts: Mapping[str, Sequence[float]],
                 title: str = "Forecast diagram", width: int = 800, height: int = 420) -> str:
    series = [("actual", np.asarray(actual, dtype=float))]
    series += [(k, np.asarray(v, dtype=float)) for k, v in forecasts.items()]
    n = len(series[0][1])
    allv = np.concatenate([s for _, s in series])
    lo, hi = float(allv.min()), float(allv.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    left, right, top, bottom = 70, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def xy(k, v):
        x = left + (pw * k / (n - 1) if n > 1 else pw / 2)
        y = top + ph * (hi - v) / (hi - lo)
        return f"{x:.2f},{y:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{left}" y="24" font-family="sans-serif" font-size="15">{escape(title)}</text>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#444"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#444"/>']
    for t in np.linspace(lo, hi, 5):
        y = top + ph * (hi - t) / (hi - lo)
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" font-family="sans-serif" '
                   f'font-size="11" text-anchor="end">{t:.4g}</text>')
    for k in range(n):
        if n <= 20 or k % max(1, n // 10) == 0:
            x = left + (pw * k / (n - 1) if n > 1 else pw / 2)
            out.append(f'<text x="{x:.2f}" y="{top + ph + 16}" font-family="sans-serif" '
                       f'font-size="11" text-anchor="middle">{k + 1}</text>')
    for i, (name, vals) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = '' if i == 0 else ' stroke-dasharray="6,3"'
        pts = " ".join(xy(k, v) for k, v in enumerate(vals))
        out.append(f'<polyline data-series="{escape(name)}" fill="none" stroke="{color}" '
                   f'stroke-width="2"{dash} points="{pts}"/>')
        ly = top + 10 + 20 * i
        out.append(f'<line x1="{left + pw + 15}" y1="{ly}" x2="{left + pw + 45}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{left + pw + 50}" y="{ly + 4}" font-family="sans-serif" '
                   f'font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_forecast_diagram(actual: Sequence[float], forecasts: Mapping[str, Sequence[float]],
                          path, title: str = "Forecast diagram"):
    """Write ``<path>.csv`` (long form) and ``<path>.svg``; returns both paths."""
    n = len(actual)
    if n == 0:
        raise SizeError("empty actual series")
    for name, values in forecasts.items():
        if len(values) != n:
            raise SizeError(f"forecast {name!r} has {len(values)} points, actual has {n}")
    base = Path(path)
    if base.suffix in (".csv", ".svg"):
        base = base.with_suffix("")
    csv_path = write_atomic(base.with_suffix(".csv"), forecast_long_csv(actual, forecasts))
    svg_path = write_atomic(base.with_suffix(".svg"), forecast_svg(actual, forecasts, title))
    return csv_path, svg_path
