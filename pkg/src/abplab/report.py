"""Structured pass/fail records and tabular emission.

Every verified inequality or identity in the suite produces a
:class:`CheckReport` carrying both sides, the tolerance, and enough
diagnostics to recompute the verdict from the stored fields alone:

* kind "le":  pass  <=>  lhs <= rhs * (1 + rel_tol) + abs_tol
* kind "eq":  pass  <=>  |lhs - rhs| <= rel_tol * max(|lhs|, |rhs|, 1) + abs_tol

Values may legitimately overflow float64 (several pipeline constants do);
non-finite values are serialized as strings so reports stay valid JSON.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CheckReport", "check_le", "check_eq", "emit_json", "emit_csv",
           "emit_plotdata", "write_atomic", "seeded_rng"]


@dataclass
class CheckReport:
    name: str
    anchor: str          # stable identifier of the statement being checked
    lhs: float
    rhs: float
    rel_tol: float = 0.0
    abs_tol: float = 0.0
    kind: str = "le"     # "le" or "eq"
    passed: bool = False
    diagnostics: dict = field(default_factory=dict)

    def recompute(self) -> bool:
        if self.kind == "eq":
            scale = max(abs(self.lhs), abs(self.rhs), 1.0)
            return abs(self.lhs - self.rhs) <= self.rel_tol * scale + self.abs_tol
        return self.lhs <= self.rhs * (1.0 + self.rel_tol) + self.abs_tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "kind": self.kind,
            "pass": bool(self.passed),
            "diagnostics": {k: _jsonable(v) for k, v in sorted(self.diagnostics.items())},
        }


def check_le(name, anchor, lhs, rhs, rel_tol=0.0, abs_tol=0.0, **diag) -> CheckReport:
    r = CheckReport(name, anchor, float(lhs), float(rhs), rel_tol, abs_tol, "le",
                    diagnostics=dict(diag))
    r.passed = r.recompute()
    return r


def check_eq(name, anchor, lhs, rhs, rel_tol=0.0, abs_tol=0.0, **diag) -> CheckReport:
    r = CheckReport(name, anchor, float(lhs), float(rhs), rel_tol, abs_tol, "eq",
                    diagnostics=dict(diag))
    r.passed = r.recompute()
    return r


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # 'inf', '-inf', 'nan'
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in sorted(v.items())}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, int, str)) or v is None or isinstance(v, float):
        return v
    return str(v)


def write_atomic(path: str, data: str) -> None:
    """Write text atomically so failed runs never leave partial report files."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def emit_json(reports, path=None, extra=None) -> str:
    payload = {"reports": [r.to_dict() for r in reports]}
    if extra:
        payload.update({k: _jsonable(v) for k, v in sorted(extra.items())})
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        write_atomic(path, text)
    return text


def emit_csv(reports, path=None) -> str:
    """CSV with header (name, anchor, lhs, rhs, tol, pass)."""
    if not reports:
        raise ValueError("no reports to emit")
    lines = ["name,anchor,lhs,rhs,tol,pass"]
    for r in reports:
        tol = r.rel_tol if r.rel_tol else r.abs_tol
        lines.append(f"{r.name},{r.anchor},{r.lhs!r},{r.rhs!r},{tol!r},{int(r.passed)}")
    text = "\n".join(lines) + "\n"
    if path:
        write_atomic(path, text)
    return text


def emit_plotdata(series, path) -> None:
    """Two-column whitespace-separated (x, y) file for one series."""
    xs, ys = series
    if len(xs) == 0:
        raise ValueError("empty series")
    lines = [f"{float(x)!r} {float(y)!r}" for x, y in zip(xs, ys)]
    write_atomic(path, "\n".join(lines) + "\n")


def seeded_rng(seed: int, tag: str = "") -> np.random.Generator:
    """Philox4x64-10 counter-based generator; (seed, crc32(tag)) is the key.

    The named algorithm makes every randomized suite reproducible from the
    documented key alone, independent of call order.
    """
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode()) & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))
