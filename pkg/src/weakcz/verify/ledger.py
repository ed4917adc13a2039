"""Machine-checked inequality records with deterministic JSON output."""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

from .anchors import ANCHORS


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    anchor: str
    lhs: float
    rhs: float
    tol: float

    @property
    def passed(self) -> bool:
        if math.isnan(self.lhs) or math.isnan(self.rhs):
            return False
        return self.lhs <= self.rhs * (1.0 + self.tol)

    def to_json(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "lhs": _clean(self.lhs),
                "rhs": _clean(self.rhs), "pass": self.passed, "tol": self.tol}


@dataclass
class InequalityLedger:
    """Ordered entries, fitted constants and provenance of one verification run."""

    entries: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def check(self, name: str, anchor_key: str, lhs: float, rhs: float, tol: float = 0.0) -> LedgerEntry:
        """Record ``lhs <= rhs * (1 + tol)`` under the named anchor."""
        e = LedgerEntry(name, ANCHORS[anchor_key], float(lhs), float(rhs), float(tol))
        self.entries.append(e)
        return e

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries],
                "constants": _clean(self.constants),
                "provenance": _clean(self.provenance)}

    def dumps(self) -> str:
        return dumps(self.to_json())


def _clean(obj):
    """Make values JSON-safe: non-finite floats become strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    """Sorted-key JSON with shortest round-trip floats; byte-stable across runs."""
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"
