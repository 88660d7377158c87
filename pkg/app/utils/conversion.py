# Rendering of command results as text, json or csv

import csv
import io
import json
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel

from app.models.api import CheckReport, Explanation, OutputFormat, SimulationReport
from app.models.decision import BehaviourMatrix, Verdict


def display(label: str) -> str:
    """Outcome labels as printed in tables: ``one_box`` -> ``one-box``."""
    return label.replace("_", "-")


def to_payload(result: Any) -> Dict[str, Any]:
    """JSON-ready dict of a result model (or a list of them under ``results``)."""
    if isinstance(result, BaseModel):
        return result.model_dump(mode="json")
    if isinstance(result, (list, tuple)):
        return {"results": [to_payload(r) for r in result]}
    return dict(result)


def to_json(payload: Dict[str, Any]) -> str:
    # Sorted keys keep the output diffable
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


def _format_eu(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def verdict_text(v: Verdict) -> str:
    lines = [f"problem: {v.problem}", f"theory: {v.theory}"]
    if v.observation:
        lines.append("observation: " + ", ".join(f"{k}={o}" for k, o in sorted(v.observation.items())))
    width = max(len(c) for c in v.candidates)
    lines.append("expected utility:")
    for candidate in v.candidates:
        mark = "*" if candidate in v.argmax_set else " "
        lines.append(f"  {mark} {candidate.ljust(width)}  {_format_eu(v.eu_table[candidate])}")
    lines.append(f"recommendation: {v.recommendation}" + (" (tie)" if v.tie else ""))
    if v.recommended_action is not None:
        lines.append(f"action: {v.recommended_action}")
    return "\n".join(lines)


def matrix_rows(m: BehaviourMatrix) -> List[List[str]]:
    header = ["theory"] + list(m.problems)
    return [header] + [[row[0]] + [display(a) for a in row[1:]] for row in m.rows()]


def matrix_text(m: BehaviourMatrix) -> str:
    rows = matrix_rows(m)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    rendered = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    rendered.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(rendered)


def to_csv(rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def simulation_text(reports: Sequence[SimulationReport]) -> str:
    lines = []
    for r in reports:
        e = r.estimate
        exact = "" if e.exact is None else f"  exact {e.exact:.6f}"
        lines.append(f"{r.theory} {r.candidate}: mean {e.mean:.6f} ± {e.stderr:.6f}{exact}  "
                     f"({e.accepted}/{e.episodes} episodes accepted, seed {r.seed})")
    return "\n".join(lines)


def simulation_rows(reports: Sequence[SimulationReport]) -> List[List[Any]]:
    rows: List[List[Any]] = [["theory", "candidate", "mean", "stderr", "exact", "episodes", "accepted"]]
    for r in reports:
        e = r.estimate
        rows.append([r.theory, r.candidate, e.mean, e.stderr, "" if e.exact is None else e.exact,
                     e.episodes, e.accepted])
    return rows


def check_text(report: CheckReport) -> str:
    name = report.problem or "problem"
    if report.ok:
        return f"{name}: ok (valid, well-defined, observationally equivalent)"
    return "\n".join(report.diagnostics + report.violations)


def explanation_text(e: Explanation) -> str:
    query = f"{', '.join(e.x)} _||_ {', '.join(e.y)}" + (f" | {', '.join(e.z)}" if e.z else "")
    if e.separated:
        return f"{query}: d-separated in the {e.graph} graph"
    return f"{query}: not d-separated in the {e.graph} graph; active path {e.rendered_path}"


def verdict_rows(v: Verdict) -> List[List[Any]]:
    rows: List[List[Any]] = [["candidate", "expected_utility", "argmax"]]
    for c in v.candidates:
        rows.append([c, "" if v.eu_table[c] is None else v.eu_table[c], int(c in v.argmax_set)])
    return rows


def render(result: Any, fmt: OutputFormat) -> str:
    """
    Render a command result.

    Args:
        result: Verdict, BehaviourMatrix, CheckReport, Explanation or a list
            of SimulationReport.
        fmt: Output format.

    Returns:
        The text to print, without a trailing newline for text output.
    """
    if fmt == OutputFormat.JSON:
        return to_json(to_payload(result))
    if isinstance(result, Verdict):
        return to_csv(verdict_rows(result)) if fmt == OutputFormat.CSV else verdict_text(result)
    if isinstance(result, BehaviourMatrix):
        return to_csv(matrix_rows(result)) if fmt == OutputFormat.CSV else matrix_text(result)
    if isinstance(result, CheckReport):
        if fmt == OutputFormat.CSV:
            return to_csv([["message"]] + [[m] for m in result.diagnostics + result.violations])
        return check_text(result)
    if isinstance(result, Explanation):
        if fmt == OutputFormat.CSV:
            return to_csv([["separated", "path"], [int(result.separated), result.rendered_path or ""]])
        return explanation_text(result)
    reports = list(result)
    return to_csv(simulation_rows(reports)) if fmt == OutputFormat.CSV else simulation_text(reports)
