from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class OracleReport:
    """Outcome of one check.

    ``max_residual`` is the check's own error measure (relative error,
    ``|e|/rho``, energy increase, ...); ``worst_input`` holds enough to
    replay the worst sample.
    """

    name: str
    samples: int
    max_residual: float
    passed: bool
    worst_input: dict | None = None
    tolerance: float | None = None
    # smallest rho - |e| seen (envelope checks only)
    margin: float | None = None
    notes: list[str] = field(default_factory=list)
    details: list["OracleReport"] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tol = "" if self.tolerance is None else f" (tol {self.tolerance:.3g})"
        line = f"{status} {self.name}: {self.samples} samples, max residual {self.max_residual:.6g}{tol}"
        if self.margin is not None:
            line += f", min margin {self.margin:.6g}"
        if self.notes:
            line += " [" + "; ".join(self.notes) + "]"
        return line

    def to_text(self) -> str:
        lines = [self.summary()]
        if self.worst_input:
            lines.append("  worst: " + ", ".join(f"{k}={v}" for k, v in self.worst_input.items()))
        for d in self.details:
            lines.extend("  " + l for l in d.to_text().splitlines())
        return "\n".join(lines)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text() + "\n", encoding="utf-8")
        return path
