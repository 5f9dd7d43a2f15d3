"""Diagnostics shared by the model checkers, parsers and loaders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    severity: str = "error"
    line: Optional[int] = None
    element: Optional[str] = None
    path: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def format(self, path: Optional[str] = None) -> str:
        """Render as ``file:line: severity CODE message``."""
        where = path or self.path or "<input>"
        line = self.line if self.line is not None else 0
        return f"{where}:{line}: {self.severity} {self.code} {self.message}"

    def __str__(self) -> str:
        return self.format()


def errors(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.is_error]


class DiagnosticError(Exception):
    """Raised when a model cannot be built because of error diagnostics."""

    def __init__(self, diagnostics: Iterable[Diagnostic], message: str = ""):
        self.diagnostics = list(diagnostics)
        text = message or "; ".join(f"{d.code}: {d.message}" for d in errors(self.diagnostics))
        super().__init__(text)

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]
