"""Rendering and reading of metric reports."""

from __future__ import annotations

from pathlib import Path

from .evaluation import METRICS, MetricReport, STATS, Summary

FORMATS = ("table", "structured")


def render(report: MetricReport, fmt: str = "table", title: str = "score") -> str:
    if fmt == "structured":
        return report.to_json() + "\n"
    if fmt != "table":
        raise ValueError(f"format must be one of {FORMATS}")
    head = "".join(f"# {k} = {v}\n" for k, v in report.header.items())
    head += f"# protocol = {report.protocol}\n# items = {report.n_items}\n"
    head += f"# std = {'sample (n-1)' if report.ddof == 1 else 'population (n)'}\n"
    return head + report.to_table(title)


def emit_report(report: MetricReport, fmt: str, path, title: str = "score") -> Path:
    path = Path(path)
    path.write_text(render(report, fmt, title))
    return path


def read_report(path) -> MetricReport:
    """Read a structured (JSON) report."""
    return MetricReport.from_json(Path(path).read_text())


def report_from_table(columns: dict[str, dict[str, float]], protocol: str = "") -> MetricReport:
    """Build a report from reference statistics, e.g. ``{"accuracy": {"min": 67.16, ...}}``."""
    stats = {m: Summary(*(columns[m][k] for k in STATS)) if m in columns else None
             for m in METRICS}
    return MetricReport(stats, 0, protocol)
