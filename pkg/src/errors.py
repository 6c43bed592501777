"""
Exception hierarchy shared by every package.

The CLI maps each family onto an exit code (see src/cli/commands.py), so
library code raises these instead of printing and returning False.
"""

from typing import Any, Dict, Iterable, Optional


class BlowupLabError(Exception):
    """Root of all errors raised by the laboratory."""


class DomainError(BlowupLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(BlowupLabError):
    """An iterative kernel (continued fraction, Newton, quadrature) did not converge."""


class NumericalFailure(BlowupLabError):
    """
    The time integration produced an unusable state.

    Args:
        message: Human readable description
        state: Optional dump of the last good state (JSON-serializable)
    """

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.state = state or {}


class StepSizeUnderflow(NumericalFailure):
    """The step controller shrank dt below its floor."""


class GlobalExistenceSuspected(NumericalFailure):
    """No blow-up was detected within the time or step budget."""


class ConfigError(BlowupLabError):
    """
    The run configuration violates the schema.

    Args:
        problems: (field_path, message) pairs, e.g. ("analysis.alpha", "...")
    """

    def __init__(self, problems: Iterable[tuple]):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class MissingArtifacts(BlowupLabError):
    """A pipeline stage was invoked before the artifacts it reads exist."""

    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(set(missing))
        super().__init__(f"missing artifacts: {', '.join(self.missing)}")


class ArtifactExists(BlowupLabError):
    """Refusing to overwrite an existing run without --force."""
