"""Line-based configuration files shared by experiment configs and V&V suites.

One directive per line, words split shell style (quotes allowed), ``#``
starts a comment::

    model brooks.sd
    factor staffing_pulse 0 2 4 6
    set entropy_factor=0.03
    include brooks-defaults.exp

``include`` splices another file, resolved relative to the including file.
Words of the form ``key=value`` are collected into the directive's options.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .diagnostics import Diagnostic


class ConfigError(ValueError):
    """Raised with every problem found in a configuration file."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.format() for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


@dataclass
class Directive:
    keyword: str
    args: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    line: int = 0
    path: Optional[str] = None

    def error(self, code: str, message: str) -> Diagnostic:
        return Diagnostic(code, message, line=self.line, path=self.path)

    def base_dir(self) -> Path:
        return Path(self.path).parent if self.path else Path(".")


def parse_config(text: str, path: Optional[str] = None, _stack: tuple = ()) -> list[Directive]:
    out: list[Directive] = []
    problems: list[Diagnostic] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as err:
            problems.append(Diagnostic("SYNTAX_ERROR", str(err), line=lineno, path=path))
            continue
        if not words:
            continue
        args, options = [], {}
        for w in words[1:]:
            key, eq, value = w.partition("=")
            if eq and key:
                if key in options:
                    problems.append(Diagnostic("DUPLICATE_OPTION", f"option {key} given twice", line=lineno, path=path))
                options[key] = value
            else:
                args.append(w)
        d = Directive(words[0], args, options, lineno, path)
        if d.keyword == "include":
            if len(args) != 1:
                problems.append(d.error("SYNTAX_ERROR", "include takes one file name"))
                continue
            target = (d.base_dir() / args[0]).resolve()
            if target in _stack:
                problems.append(d.error("INCLUDE_CYCLE", f"{args[0]} includes itself"))
                continue
            try:
                out.extend(parse_config(target.read_text(encoding="utf-8"), str(target), _stack + (target,)))
            except OSError as err:
                problems.append(d.error("MISSING_FILE", f"cannot read {args[0]}: {err.strerror}"))
            except ConfigError as err:
                problems.extend(err.diagnostics)
            continue
        out.append(d)
    if problems:
        raise ConfigError(problems)
    return out


def load_config(path) -> list[Directive]:
    path = Path(path).resolve()
    return parse_config(path.read_text(encoding="utf-8"), str(path), (path,))


def parse_assignment(text: str) -> tuple[str, float]:
    """``name=value`` to ``(name, float(value))``; raises ``ValueError``."""
    name, eq, value = text.partition("=")
    if not eq or not name.strip():
        raise ValueError(f"expected name=value, got {text!r}")
    return name.strip(), float(value)


def parse_real(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{what} must be a number, got {text!r}") from None
