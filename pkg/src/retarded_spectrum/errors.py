"""Exception hierarchy shared by every stage of the spectral pipeline."""

from __future__ import annotations


class SpectralError(Exception):
    """Base class for all errors raised by retarded_spectrum."""


class ExprSyntaxError(SpectralError, ValueError):
    """Malformed coefficient expression."""

    def __init__(self, message: str, position: int, expected: str) -> None:
        super().__init__(f"{message} at position {position} (expected {expected})")
        self.position = position
        self.expected = expected


class UnknownIdentifierError(SpectralError, ValueError):
    """Identifier outside the function/constant whitelist."""

    def __init__(self, name: str, position: int) -> None:
        super().__init__(f"Unknown identifier {name!r} at position {position}")
        self.name = name
        self.position = position


class EvalDomainError(SpectralError, ArithmeticError):
    """Expression evaluated outside the real domain of an operation."""

    def __init__(self, reason: str, x: float) -> None:
        super().__init__(f"{reason} at x={x!r}")
        self.reason = reason
        self.x = x


class ProblemValidationError(SpectralError, ValueError):
    """A boundary-value problem invariant does not hold."""

    def __init__(self, message: str, invariant: str, abscissa: float | None = None) -> None:
        super().__init__(message)
        self.invariant = invariant
        self.abscissa = abscissa


class NonFiniteStateError(SpectralError, ArithmeticError):
    """Overflow or NaN while marching the solution."""

    def __init__(self, abscissa: float, mu: float) -> None:
        super().__init__(f"Non-finite solution state at x={abscissa!r} for mu={mu!r}")
        self.abscissa = abscissa
        self.mu = mu


class NoConvergenceError(SpectralError, RuntimeError):
    """Fixed-point iteration did not settle within its budget."""

    def __init__(self, iterations: int, residual: float) -> None:
        super().__init__(f"No convergence after {iterations} iterations (last residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class MuZeroError(SpectralError, ValueError):
    """The integral-equation form is undefined at mu = 0."""


class IndexingError(SpectralError):
    """A spectrum label would receive zero or several roots."""

    def __init__(self, label: str, candidates: list[float]) -> None:
        shown = ", ".join(f"{c:.12g}" for c in candidates) or "none"
        super().__init__(f"Label {label} received {len(candidates)} roots (candidates: {shown})")
        self.label = label
        self.candidates = candidates


class MissingLabelError(SpectralError, KeyError):
    """A spectrum label required for a trace term is absent."""

    def __init__(self, label: str) -> None:
        super().__init__(label)
        self.label = label

    def __str__(self) -> str:
        return f"Label {self.label} is not present in the spectrum"


class LabelError(SpectralError, IndexError):
    """Label whose unperturbed zero vanishes passed to the asymptotic formula."""


class ConfigError(SpectralError, ValueError):
    """Invalid problem configuration file."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
        self.key = key
