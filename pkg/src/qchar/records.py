"""Result records and bit-stable CSV/JSON writers."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .poly import PolySymbol, _rat_str
from .series import TauSeries

__all__ = [
    "VerificationRecord",
    "residual_record",
    "format_float",
    "write_csv",
    "write_json",
    "dumps_json",
]


@dataclass
class VerificationRecord:
    """Outcome of an exact identity check.

    ``residuals`` holds the raw residual series keyed by component label and
    is not serialised.
    """

    identity: str
    hamiltonian: str
    orders: dict
    residual_zero: bool
    first_nonzero_term: dict | None = None
    residuals: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "hamiltonian": self.hamiltonian,
            "orders": dict(self.orders),
            "residual_zero": self.residual_zero,
            "first_nonzero_term": self.first_nonzero_term,
        }

    def __bool__(self) -> bool:
        return self.residual_zero


def _term_dict(label: str, found) -> dict:
    idx, exps, hp, (re, im) = found
    return {
        "component": label,
        "tau_powers": list(idx),
        "hbar_power": hp,
        "exponents": list(exps),
        "coeff_re": _rat_str(re),
        "coeff_im": _rat_str(im),
    }


def residual_record(
    identity: str,
    hamiltonian: PolySymbol | str,
    orders: Mapping[str, Any],
    residuals: Mapping[str, TauSeries | PolySymbol],
) -> VerificationRecord:
    """Build a record from labelled residuals; zero iff every residual is exactly zero."""
    first = None
    for label in residuals:
        r = residuals[label]
        if isinstance(r, PolySymbol):
            r = TauSeries.constant(r, 0, 0)
        found = r.first_nonzero()
        if found is not None:
            first = _term_dict(label, found)
            break
    return VerificationRecord(
        identity=identity,
        hamiltonian=str(hamiltonian),
        orders=dict(orders),
        residual_zero=first is None,
        first_nonzero_term=first,
        residuals=dict(residuals),
    )


def format_float(x: float) -> str:
    """17 significant digits; integers and specials in a fixed spelling."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"
    return f"{x:.17g}"


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a CSV with fixed column order and ``\\n`` line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def _jsonable(obj):
    if isinstance(obj, float):
        return float(format_float(obj)) if math.isfinite(obj) else format_float(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def dumps_json(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_json(path: Path | str, doc) -> None:
    Path(path).write_bytes(dumps_json(doc).encode("utf-8"))
