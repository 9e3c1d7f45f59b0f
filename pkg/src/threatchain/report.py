"""Report rows, mitigation priorities and table/csv/json rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from typing import Sequence

from .catalog import ThreatModel, natural_key
from .markov import AttackDistribution

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ReportRow:
    threat_id: str
    name: str
    requirement: str
    weight: float
    alpha: float
    mu: float
    p_attack: float
    rank: int


@dataclass(frozen=True)
class VulnerabilityPriority:
    vulnerability_id: str
    name: str
    score: float
    criticality: float
    threats: tuple[str, ...]


# columns rendered in scientific notation
_PROBABILITY_FIELDS = {"alpha", "mu", "p_attack", "criticality", "frequency", "expected"}


def report_rows(model: ThreatModel, dist: AttackDistribution) -> list[ReportRow]:
    """Rows in threat-id order; rank 1 is the most probable attack.

    Ties on p_attack are broken by threat id so the ranking is stable.
    """
    order = sorted(dist.rows, key=lambda r: (-r.p_attack, natural_key(r.threat_id)))
    rank = {r.threat_id: n for n, r in enumerate(order, start=1)}
    rows = []
    for r in sorted(dist.rows, key=lambda r: natural_key(r.threat_id)):
        t = model.threat(r.threat_id)
        rows.append(ReportRow(r.threat_id, t.name, t.requirement.value, r.weight,
                              r.alpha, r.mu, r.p_attack, rank[r.threat_id]))
    return rows


def prioritize(model: ThreatModel, dist: AttackDistribution) -> list[VulnerabilityPriority]:
    """Rank vulnerabilities by score times the attack probability they feed."""
    p_attack = {r.threat_id: r.p_attack for r in dist.rows}
    out = []
    for v in model.vulnerabilities:
        users = tuple(t.id for t in model.threats if v.id in t.exploits)
        crit = v.resolved_score * math.fsum(p_attack[t] for t in users)
        out.append(VulnerabilityPriority(v.id, v.name, v.resolved_score, crit, users))
    out.sort(key=lambda p: (-p.criticality, natural_key(p.vulnerability_id)))
    return out


def _csv_cell(name: str, value) -> str:
    if isinstance(value, float):
        if name in _PROBABILITY_FIELDS:
            return f"{value:.5e}"
        return f"{value:.6g}"
    if isinstance(value, (tuple, list)):
        return " ".join(str(v) for v in value)
    return str(value)


def _json_value(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def render(rows: Sequence, fmt: str, row_type=None, meta: dict | None = None) -> str:
    """Render dataclass rows as ``table``, ``csv`` or ``json``.

    ``row_type`` supplies the header when ``rows`` is empty.
    """
    row_type = row_type or (type(rows[0]) if rows else ReportRow)
    names = [f.name for f in fields(row_type)]

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_csv_cell(n, getattr(row, n)) for n in names])
        return buf.getvalue()

    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION}
        doc.update(meta or {})
        doc["rows"] = [{n: _json_value(getattr(row, n)) for n in names} for row in rows]
        return json.dumps(doc, indent=2) + "\n"

    if fmt == "table":
        cells = [names] + [[_csv_cell(n, getattr(row, n)) for n in names] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(names))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        if meta:
            lines.append("")
            lines.extend(f"{k}: {v}" for k, v in meta.items())
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown format {fmt!r}")


def render_matrix(states: Sequence[str], p, fmt: str) -> str:
    """Matrix output: a header row of state labels, then one row per state.

    Entries keep full double precision so row sums survive the round trip.
    """
    if fmt == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, "states": list(states),
                           "p": [[float(x) for x in row] for row in p]}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(states)
        for row in p:
            writer.writerow([f"{float(x):.16e}" for x in row])
        return buf.getvalue()
    if fmt == "table":
        width = 10
        lines = [" " * 4 + "".join(s.rjust(width) for s in states)]
        for label, row in zip(states, p):
            lines.append(label.ljust(4) + "".join(f"{float(x):{width}.4g}" for x in row))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
