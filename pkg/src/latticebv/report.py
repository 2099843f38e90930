"""Check results and their serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Any

from .galg import FormalSeries, GradedPoly, Scalar

__all__ = ["CheckResult", "residual_summary", "to_jsonable", "dumps"]


def residual_summary(x) -> dict:
    """First nonzero multi-degree and the number of nonzero monomials."""
    if isinstance(x, GradedPoly):
        x = FormalSeries.lift(x)
    if isinstance(x, FormalSeries):
        first = x.first_nonzero()
        return {
            "first_nonzero": None if first is None else {k: v for k, v in first[0].items()},
            "monomials": sum(len(c.terms) for c in x.coeffs.values()),
        }
    if isinstance(x, Scalar):
        return {"first_nonzero": None if not x else {}, "monomials": 1 if x else 0}
    raise TypeError(f"cannot summarize {type(x).__name__}")


@dataclass
class CheckResult:
    check: str
    status: str
    residual: dict = dc_field(default_factory=lambda: {"first_nonzero": None, "monomials": 0})
    extra: dict = dc_field(default_factory=dict)
    inputs: dict = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    @classmethod
    def from_residual(cls, check: str, residual, **extra) -> "CheckResult":
        summ = residual_summary(residual)
        return cls(check, "pass" if summ["monomials"] == 0 else "fail", summ, dict(extra))

    @classmethod
    def from_bool(cls, check: str, ok: bool, **extra) -> "CheckResult":
        return cls(check, "pass" if ok else "fail",
                   {"first_nonzero": None if ok else {}, "monomials": 0 if ok else 1}, dict(extra))

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        out = {"check": self.check, "status": self.status, "residual": self.residual}
        if self.extra:
            out["extra"] = to_jsonable(self.extra)
        if self.inputs and not self.ok:
            out["reproducer"] = to_jsonable(self.inputs)
        return out


def to_jsonable(obj: Any):
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in seq]
    if isinstance(obj, (str, int, bool, float)) or obj is None:
        return obj
    if hasattr(obj, "numerator") and hasattr(obj, "denominator"):
        return f"{obj.numerator}/{obj.denominator}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
