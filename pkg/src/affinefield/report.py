"""Verdict records and their JSON-lines / CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Iterable

# identities: relative tolerance; inequalities between reals: absolute slack
# relative to a problem scale
IDENTITY_RTOL = 1e-9
REAL_SLACK = 1e-12


def round_up(x: float) -> float:
    """Push a floating bound upward by a relative 1e-12 (one-sided safety)."""
    if not math.isfinite(x):
        return x
    return x + abs(x) * REAL_SLACK


def upper_holds(lhs, rhs, scale: float = 1.0) -> bool:
    """lhs <= rhs, exactly when both are rational, else with slack 1e-12 * scale."""
    if isinstance(lhs, (int, Fraction)) and isinstance(rhs, (int, Fraction)):
        return lhs <= rhs
    return float(lhs) <= float(rhs) + REAL_SLACK * abs(scale)


def lower_holds(value, bound) -> bool:
    """value >= bound, with an irrational bound rounded up first."""
    if isinstance(value, (int, Fraction)) and isinstance(bound, (int, Fraction)):
        return value >= bound
    return float(value) >= round_up(float(bound))


def fmt_number(x) -> str:
    """Rationals as 'num/den', reals with 17 significant digits."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x:.17g}"
    if x is None:
        return ""
    return str(x)


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return x


@dataclass
class VerdictReport:
    """One checked inequality or identity.

    ``sense`` is the relation asserted between ``lhs`` (the computed
    quantity) and ``rhs_asserted``: ``"<="``, ``">="`` or ``"=="``.
    ``margin`` is signed so that it is non-negative exactly when the
    relation holds.  ``rhs_logged`` carries a second, stronger bound that
    is tabulated but never gates the exit code.
    """

    statement_id: str
    field: str
    lhs: Any
    rhs_asserted: Any
    sense: str = "<="
    holds: bool = True
    rhs_logged: Any = None
    logged_holds: bool | None = None
    vacuous: bool = False
    inputs: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def margin(self) -> float:
        lhs, rhs = float(self.lhs), float(self.rhs_asserted)
        if self.sense == "<=":
            return rhs - lhs
        if self.sense == ">=":
            return lhs - rhs
        return -abs(lhs - rhs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = self.margin
        order = ["statement_id", "field", "inputs", "lhs", "sense", "rhs_asserted", "rhs_logged",
                 "margin", "holds", "logged_holds", "vacuous", "seed"]
        return {k: _jsonable(d[k]) for k in order}


def upper_report(statement_id, field, lhs, rhs, scale=1.0, rhs_logged=None, **kw) -> VerdictReport:
    return VerdictReport(
        statement_id=statement_id, field=str(field), lhs=lhs, rhs_asserted=rhs, sense="<=",
        holds=upper_holds(lhs, rhs, scale), rhs_logged=rhs_logged,
        logged_holds=None if rhs_logged is None else upper_holds(lhs, rhs_logged, scale), **kw)


def lower_report(statement_id, field, value, bound, rhs_logged=None, **kw) -> VerdictReport:
    return VerdictReport(
        statement_id=statement_id, field=str(field), lhs=value, rhs_asserted=bound, sense=">=",
        holds=lower_holds(value, bound), rhs_logged=rhs_logged,
        logged_holds=None if rhs_logged is None else lower_holds(value, rhs_logged), **kw)


def identity_report(statement_id, field, lhs, rhs, rtol=IDENTITY_RTOL, scale=None, **kw) -> VerdictReport:
    scale = max(abs(float(lhs)), abs(float(rhs)), 1.0) if scale is None else scale
    return VerdictReport(
        statement_id=statement_id, field=str(field), lhs=lhs, rhs_asserted=rhs, sense="==",
        holds=abs(float(lhs) - float(rhs)) <= rtol * scale, **kw)


def to_json_line(record) -> str:
    d = record.to_dict() if hasattr(record, "to_dict") else _jsonable(record)
    return json.dumps(d, sort_keys=False, separators=(",", ":"))


def write_jsonl(records: Iterable, stream) -> None:
    for r in records:
        stream.write(to_json_line(r) + "\n")


def write_csv(rows: Iterable[dict], stream, columns: list[str] | None = None) -> None:
    rows = [r.to_dict() if hasattr(r, "to_dict") else r for r in rows]
    if not rows:
        return
    if columns is None:
        # first-seen order over all rows, so heterogeneous rows share one header
        columns = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_number(r.get(c)) if not isinstance(r.get(c), (dict, list))
                    else json.dumps(_jsonable(r.get(c)), separators=(",", ":")) for c in columns])


def csv_text(rows, columns=None) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, columns)
    return buf.getvalue()
