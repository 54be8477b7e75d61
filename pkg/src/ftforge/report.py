"""Validation reporting shared by the activity and fault-tree validators."""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    element_id: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def to_json(self, pretty: bool = False) -> str:
        payload = [
            {"code": v.code, "message": v.message, "element_id": v.element_id}
            for v in self.violations
        ]
        if pretty:
            return json.dumps(payload, indent=2)
        return json.dumps(payload)

    def __str__(self) -> str:
        if self.ok:
            return "no violations"
        return "\n".join(f"[{v.code}] {v.message} ({v.element_id})" for v in self.violations)
