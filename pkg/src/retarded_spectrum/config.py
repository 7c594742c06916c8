"""Problem configuration files, numerics defaults, and environment variable overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Any

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError

from retarded_spectrum.errors import ConfigError, SpectralError
from retarded_spectrum.expr import depends_on_x, eval_expr, parse_expr


def _coefficient(value: Any) -> Any:
    """Accept plain numbers, numeric strings, or x-free expressions such as ``pi/2``."""
    if not isinstance(value, str):
        return value
    try:
        return float(value)
    except ValueError:
        pass
    try:
        tree = parse_expr(value)
        if depends_on_x(tree):
            msg = f"coefficient {value!r} must not depend on x"
            raise ValueError(msg)
        return eval_expr(tree, 0.0)
    except SpectralError as exc:
        raise ValueError(str(exc)) from exc


def _expression_text(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, int | float):
        return repr(float(value))
    return value


Coefficient = Annotated[float, BeforeValidator(_coefficient), Field(allow_inf_nan=False)]
ExpressionText = Annotated[str, BeforeValidator(_expression_text), Field(min_length=1)]


class ProblemSection(BaseModel):
    """Boundary coefficients and the piecewise coefficient functions."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a1: Coefficient
    a1p: Coefficient
    a2: Coefficient
    a2p: Coefficient
    b: Coefficient
    delta: Coefficient
    q_left: ExpressionText
    q_right: ExpressionText
    delay_left: ExpressionText
    delay_right: ExpressionText


class NumericsSection(BaseModel):
    """Discretisation and search parameters; every key has a default."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    grid_points: int = Field(default=4096, ge=16)
    quad_points: int = Field(default=2048, ge=32)
    scan_step: float = Field(default=0.05, gt=0.0, le=0.1)
    root_tol: float = Field(default=1e-12, gt=0.0)
    n_max: int = Field(default=40, ge=2)


class ProblemConfig(BaseModel):
    """A parsed problem file: one ``problem`` section and an optional ``numerics`` section."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    problem: ProblemSection
    numerics: NumericsSection = Field(default_factory=NumericsSection)


@dataclass(frozen=True)
class RuntimeSettings:
    """Process-level settings with environment variable overrides."""

    threads: int = field(default_factory=lambda: int(os.environ.get("THREADS", "1")))


def get_runtime_settings() -> RuntimeSettings:
    """Return runtime settings with the ``THREADS`` override applied.

    Raises:
        ConfigError: If ``THREADS`` is not a positive integer.
    """
    try:
        settings = RuntimeSettings()
    except ValueError as exc:
        msg = f"THREADS must be a positive integer, got {os.environ.get('THREADS')!r}"
        raise ConfigError(msg, key="THREADS") from exc
    if settings.threads < 1:
        msg = f"THREADS must be a positive integer, got {settings.threads}"
        raise ConfigError(msg, key="THREADS")
    return settings


# safe_load drops source positions, so a second pass over the composed node tree recovers
# them. Pydantic error locations are tuples of key names, which index straight into this map.
def _key_lines(text: str) -> dict[tuple[str, ...], int]:
    """Map each key path in the document to its 1-based source line."""
    root = yaml.compose(text)
    lines: dict[tuple[str, ...], int] = {}

    def walk(node: yaml.Node, prefix: tuple[str, ...]) -> None:
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            path = (*prefix, str(key_node.value))
            lines[path] = key_node.start_mark.line + 1
            walk(value_node, path)

    if root is not None:
        walk(root, ())
    return lines


def _line_for(loc: tuple[str, ...], lines: dict[tuple[str, ...], int]) -> int | None:
    # a missing key has no line of its own; fall back to its nearest enclosing section
    for end in range(len(loc), 0, -1):
        if loc[:end] in lines:
            return lines[loc[:end]]
    return None


# Only the first pydantic error is reported, worded by its error type and tagged with the line
# of the deepest key on its location that exists in the file.
def _config_error(exc: ValidationError, lines: dict[tuple[str, ...], int]) -> ConfigError:
    first = exc.errors()[0]
    loc = tuple(str(part) for part in first["loc"])
    dotted = ".".join(loc)
    name = loc[-1] if loc else "<root>"
    if first["type"] == "extra_forbidden":
        where = f" in section {loc[0]}" if len(loc) > 1 else ""
        message = f"unknown key {name}{where}"
    elif first["type"] == "missing":
        message = f"missing required key {dotted}"
    else:
        message = f"invalid value for {dotted}: {first['msg']}"
    return ConfigError(message, line=_line_for(loc, lines) or 1, key=dotted)


def parse_config(text: str, source: str = "<string>") -> ProblemConfig:
    """Validate the text of a problem file.

    Args:
        text: YAML document.
        source: Name used in messages, usually the file path.

    Returns:
        The validated configuration with ``numerics`` defaults filled in.

    Raises:
        ConfigError: Malformed YAML, unknown or missing keys, or invalid values; the message
            carries the source line.
    """
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        msg = f"{source} is not valid YAML: {getattr(exc, 'problem', None) or exc}"
        raise ConfigError(msg, line=line) from exc

    if not isinstance(raw, dict):
        msg = f"{source} must contain a 'problem' section"
        raise ConfigError(msg, line=1)

    try:
        return ProblemConfig.model_validate(raw)
    except ValidationError as exc:
        raise _config_error(exc, lines) from exc


def load_config(path: Path | str) -> ProblemConfig:
    """Load a problem file from disk, filling ``numerics`` defaults.

    Args:
        path: Path to the YAML problem file.

    Returns:
        The validated configuration.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If the file cannot be read as UTF-8 text or the document is invalid.
    """
    path = Path(path)
    if not path.exists():
        msg = f"Problem configuration file not found: {path}"
        raise FileNotFoundError(msg)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        msg = f"cannot read problem configuration file {path}: {exc}"
        raise ConfigError(msg) from exc
    return parse_config(text, source=str(path))
