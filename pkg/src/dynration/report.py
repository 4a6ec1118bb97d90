"""File artifacts: profile documents, CSV reports, run metadata.

All emitters are deterministic functions of their inputs (no timestamps,
no environment lookups), so a fixed seed yields byte-identical artifacts.
Rationals are written as exact fraction strings and floats as reprs, which
round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json

from .ascent import SolveReport
from .bestresponse import EquilibriumReport, verification_rows
from .evaluate import AllocationProfile, Evaluation
from .market import Market
from .mechanism import PricedMechanism, price_path_rows
from .numeric import format_number, parse_number
from .stepfn import Jump, StepFunction


def _encode(x):
    if x is None:
        return None
    if isinstance(x, (bool, float)):
        return x
    rendered = format_number(x)
    try:
        return int(rendered)
    except ValueError:
        return rendered


# -- profile files -----------------------------------------------------------
#
# JSON array with one object per period:
#   {"levels": [...], "jumps": [{"at": ..., "closed": bool}, ...]}

def profile_to_json(profile: AllocationProfile) -> str:
    doc = [
        {
            "levels": [_encode(lvl) for lvl in r.levels],
            "jumps": [{"at": _encode(j.at), "closed": j.closed} for j in r.jumps],
        }
        for r in profile.steps
    ]
    return json.dumps(doc, indent=2) + "\n"


def profile_from_json(text: str, mode: str) -> AllocationProfile:
    doc = json.loads(text)
    steps = []
    for entry in doc:
        levels = [parse_number(x, mode) for x in entry["levels"]]
        jumps = [Jump(parse_number(j["at"], mode), bool(j["closed"])) for j in entry["jumps"]]
        steps.append(StepFunction(levels, jumps))
    return AllocationProfile(tuple(steps))


# -- CSV emitters ------------------------------------------------------------

def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if x is None else format_number(x) if not isinstance(x, str) else x for x in row])
    return buf.getvalue()


def evaluation_csv(evaluation: Evaluation) -> str:
    return _write_csv(
        ("t", "v", "fstar", "r", "U", "p", "cashflow"),
        evaluation.report_rows(),
    )


def verification_csv(market: Market, report: EquilibriumReport) -> str:
    return _write_csv(
        ("t", "v", "action", "utility", "icSlack"),
        verification_rows(market, report),
    )


def price_path_csv(mech: PricedMechanism) -> str:
    return _write_csv(
        ("t", "pHigh", "perWinnerPrice", "lotteryQuantity"),
        price_path_rows(mech),
    )


def solve_metadata(report: SolveReport, *, starts_requested: int, mode: str) -> str:
    """Run-metadata text block: everything needed to reproduce the run."""
    lines = [
        f"mode: {mode}",
        f"seed: {report.seed}",
        f"tol: {format_number(report.tol)}",
        f"starts: {starts_requested}",
        f"revenue: {format_number(report.revenue)}",
        f"inventory_used: {format_number(report.inventory_used)}",
        f"binding: {report.binding}",
        f"sweeps: {report.sweeps}",
        f"converged: {report.converged}",
    ]
    for rec in report.starts:
        lines.append(
            f"start {rec.label}: revenue={format_number(rec.revenue)} "
            f"sweeps={rec.sweeps} converged={rec.converged}"
        )
    return "\n".join(lines) + "\n"
