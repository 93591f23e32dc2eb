"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid configuration; carries every violation as ``(key_path, message)``."""

    def __init__(self, problems, line: int | None = None):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        self.line = line
        lines = [f"{key}: {msg}" if key else msg for key, msg in self.problems]
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + "; ".join(lines))


class InsufficientDataError(ValueError):
    """A reduction needs more snapshots than the trajectory holds."""


class ExperimentError(RuntimeError):
    """An experiment's standing hypothesis failed (e.g. the reference run grew too early)."""
