"""Text, CSV and SVG renderings of budgets and Monte-Carlo comparisons."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .decomposition import BudgetReport
from .montecarlo import ComparisonReport
from .scenario import AuditEntry

BUDGET_COLUMNS = ("epoch", "output", "source", "sigma", "share")
MC_COLUMNS = ("output", "source", "analytic_var", "mc_var", "ratio", "lower", "upper", "status")


def budget_csv(reports: Sequence[BudgetReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BUDGET_COLUMNS)
    for rep in reports:
        for o, (label, _) in enumerate(rep.outputs):
            for s, source in enumerate(rep.sources):
                w.writerow([f"{rep.epoch:.6f}", label, source, f"{rep.sigma[s, o]:.9e}", f"{rep.share[s, o]:.9f}"])
    return buf.getvalue()


def read_budget_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def budget_table(reports: Sequence[BudgetReport], title: str = "", audit: Sequence[AuditEntry] = ()) -> str:
    lines = []
    if title:
        lines += [title, "=" * len(title), ""]
    if audit:
        lines.append("Parsed inputs (SI):")
        width = max(len(a.key) for a in audit)
        for a in audit:
            lines.append(f"  {a.key:<{width}}  {a.text!r:>24} -> {a.si:.9g} {a.unit}")
        lines.append("")
    for rep in reports:
        lines.append(f"Epoch {rep.epoch:g} s")
        header = f"  {'source':<10}" + "".join(f"{label + ' [' + unit + ']':>24}" for (label, _), unit in zip(rep.outputs, rep.units))
        lines.append(header)
        for s, source in enumerate(rep.sources):
            cells = "".join(f"{rep.sigma[s, o]:>13.4g} {100 * rep.share[s, o]:>8.3f}%" for o in range(len(rep.outputs)))
            lines.append(f"  {source:<10}{cells}")
        total = "".join(f"{rep.total_sigma[o]:>13.4g} {100.0:>8.3f}%" for o in range(len(rep.outputs)))
        lines.append(f"  {'TOTAL':<10}{total}")
        lines.append("")
    lines.append("sigma: per-source 1-sigma contribution; %: share of the output's variance.")
    lines.append("Per-source sigmas combine by root-sum-square to TOTAL.")
    return "\n".join(lines) + "\n"


def mc_csv(report: ComparisonReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MC_COLUMNS)
    for r in report.rows:
        w.writerow([r.output, r.source, f"{r.analytic_var:.9e}", f"{r.mc_var:.9e}", f"{r.ratio:.6f}",
                    f"{r.lower:.9e}", f"{r.upper:.9e}", r.status])  # fmt: skip
    return buf.getvalue()


def mc_table(report: ComparisonReport) -> str:
    lines = [f"Monte-Carlo check: N = {report.count}, {100 * report.confidence:g}% chi-square interval"]
    if report.wide_intervals:
        lines.append("WARNING: N is small; intervals are too wide to detect mismatches.")
    lines.append(f"  {'output':<8} {'source':<10} {'analytic':>12} {'monte-carlo':>12} {'ratio':>8}  status")
    for r in report.rows:
        lines.append(f"  {r.output:<8} {r.source:<10} {r.analytic_var:>12.4e} {r.mc_var:>12.4e} {r.ratio:>8.3f}  {r.status}")
    n_fail = len(report.failures)
    lines.append(f"{len(report.rows) - n_fail}/{len(report.rows)} comparisons passed" + ("" if n_fail == 0 else f"; {n_fail} FAILED"))
    return "\n".join(lines) + "\n"


_PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


def budget_svg(report: BudgetReport, outputs: Sequence[str], title: str) -> str:
    """Grouped bars: one group per source, one bar per output, height = share in %."""
    cols = [[label for label, _ in report.outputs].index(o) for o in outputs]
    n_src = len(report.sources)
    left, right, top, bottom = 60, 20, 40, 90
    group_w = 14 + 8 * len(cols)
    width = left + right + n_src * group_w
    height = 360
    plot_h = height - top - bottom
    peak = max(float(report.share[:, cols].max()) if n_src else 0.0, 1e-12)
    ymax = min(100.0, max(10.0, 10.0 * -(-peak * 100.0 // 10.0)))

    def y(pct: float) -> float:
        return top + plot_h * (1.0 - pct / ymax)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for tick in range(0, int(ymax) + 1, 10):
        yy = y(tick)
        out.append(f'<line x1="{left}" y1="{yy:.1f}" x2="{width - right}" y2="{yy:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 5}" y="{yy + 3:.1f}" text-anchor="end">{tick}%</text>')
    for s, source in enumerate(report.sources):
        x0 = left + s * group_w + 7
        for k, c in enumerate(cols):
            pct = 100.0 * float(report.share[s, c])
            yy = y(pct)
            out.append(
                f'<rect x="{x0 + 8 * k}" y="{yy:.2f}" width="7" height="{top + plot_h - yy:.2f}" '
                f'fill="{_PALETTE[k % len(_PALETTE)]}"><title>{escape(source)} / {escape(outputs[k])}: {pct:.3f}%</title></rect>'
            )
        xl = x0 + 4 * len(cols)
        out.append(
            f'<text x="{xl:.1f}" y="{top + plot_h + 8}" text-anchor="end" '
            f'transform="rotate(-60 {xl:.1f} {top + plot_h + 8})">{escape(source)}</text>'
        )
    out.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{width - right}" y2="{top + plot_h}" stroke="#000"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#000"/>')
    for k, label in enumerate(outputs):
        lx = left + 10 + 90 * k
        out.append(f'<rect x="{lx}" y="{height - 16}" width="10" height="10" fill="{_PALETTE[k % len(_PALETTE)]}"/>')
        out.append(f'<text x="{lx + 14}" y="{height - 7}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
