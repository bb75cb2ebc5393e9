"""Machine-checkable records of solver residuals and bound checks."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    """One named inequality with its measured value and tolerance."""

    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def to_jsonable(self) -> dict:
        out = {
            "passed": bool(self.passed),
            "value": float(self.value),
            "tol": float(self.tol),
        }
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Certificate:
    checks: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def add(self, name: str, passed: bool, value: float, tol: float, detail: str = "") -> Check:
        check = Check(name, bool(passed), float(value), float(tol), detail)
        self.checks.append(check)
        return check

    # value <= tol, the common shape of a residual or slack check
    def add_bound(self, name: str, value: float, tol: float, detail: str = "") -> Check:
        return self.add(name, value <= tol, value, tol, detail)

    def __getitem__(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def valid(self) -> bool:
        """Conjunction of every individual check flag."""
        return all(check.passed for check in self.checks)

    def to_jsonable(self) -> dict:
        return {
            "checks": {check.name: check.to_jsonable() for check in self.checks},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "info": self.info,
            "valid": self.valid,
        }
