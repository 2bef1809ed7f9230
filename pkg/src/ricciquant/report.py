"""Check records shared by the verification routines and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


@dataclass
class Check:
    id: str
    residual: float
    tolerance: float
    anchor: str = ""
    passed: bool | None = None
    # comparison: residual must be below the tolerance unless "ge" is requested
    mode: str = "lt"
    note: str = ""

    def __post_init__(self):
        if self.passed is None:
            r = float(self.residual)
            if self.mode == "lt":
                self.passed = bool(r < self.tolerance)
            elif self.mode == "ge":
                self.passed = bool(r >= self.tolerance)
            elif self.mode == "gt":
                self.passed = bool(r > self.tolerance)
            else:
                raise ValueError(f"unknown mode {self.mode!r}")
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)


@dataclass
class Report:
    name: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, id, residual, tolerance, anchor="", mode="lt", note=""):
        c = Check(id, residual, tolerance, anchor=anchor, mode=mode, note=note)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = ""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.id, c.residual, c.tolerance, c.anchor,
                                     c.passed, c.mode, c.note))
        self.info.update({prefix + k: v for k, v in other.info.items()})

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, id):
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": [asdict(c) for c in sorted(self.checks, key=lambda c: c.id)],
            "info": self.info,
        }
