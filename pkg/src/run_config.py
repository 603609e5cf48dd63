"""Run configuration: TOML or JSON text validated into a RunConfig.

Example (TOML)::

    command = "solve"
    seed = 0

    [problem]
    domain = "interval"
    extents = [1.0]
    operator = "spectral"
    s = 0.5
    p = 3
    q = 3
"""

import json
import logging
import re
import tomllib
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Any

from src.basis import ModelDomain
from src.basis import ResolutionError
from src.config import DEFAULT_SEED
from src.config import DEFAULT_TRUNCATION_1D
from src.config import DEFAULT_TRUNCATION_2D
from src.config import OUTPUT_DIR
from src.functional import SystemProblem
from src.functional import default_grid_size
from src.operators import OPERATOR_KINDS
from src.solver import CONTINUATION_PARAMETERS
from src.solver import gate

logger = logging.getLogger(__name__)

COMMANDS: tuple[str, ...] = ("gate", "spectrum", "solve", "verify", "sweep")
SWEEP_PARAMETERS: tuple[str, ...] = ("pq", *CONTINUATION_PARAMETERS)

_TOP_LEVEL_KEYS = {"command", "seed", "problem", "sweep", "output", "diagnostics"}
_PROBLEM_KEYS = {"domain", "extents", "operator", "s", "p", "q", "lam", "mu", "alpha", "truncation", "grid_size"}
_SWEEP_KEYS = {"parameter", "start", "stop", "steps"}
_OUTPUT_KEYS = {"directory"}
_DIAGNOSTICS_KEYS = {"s_values", "intervals", "levels"}


class ConfigParseError(ValueError):
    """Malformed configuration text; `line` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigValidationError(ValueError):
    """A configuration value violates its precondition; `field` names the offending key."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "pq"
    start: float = 1.05
    stop: float = 6.0
    steps: int = 100

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.start]
        width = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * width for i in range(self.steps)]


@dataclass(frozen=True)
class DiagnosticsConfig:
    s_values: tuple[float, ...] = (0.25, 0.5, 0.75)
    intervals: int = 512
    levels: int = 3


@dataclass(frozen=True)
class RunConfig:
    problem: SystemProblem
    command: str = "solve"
    seed: int = DEFAULT_SEED
    sweep: SweepConfig = field(default_factory=SweepConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output_dir: str = OUTPUT_DIR
    alpha_defaulted: bool = False

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "problem": self.problem.to_dict(),
            "sweep": vars(self.sweep),
            "diagnostics": {**vars(self.diagnostics), "s_values": list(self.diagnostics.s_values)},
            "output": {"directory": self.output_dir},
            "alpha_defaulted": self.alpha_defaulted,
        }


def _load(text: str) -> dict[str, Any]:
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(exc.msg, exc.lineno) from exc
        if not isinstance(data, dict):
            raise ConfigParseError("Top-level JSON value must be an object")
        return data
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ConfigParseError(str(exc), int(match.group(1)) if match else None) from exc


def _block(data: dict[str, Any], name: str, allowed: set[str]) -> dict[str, Any]:
    block = data.get(name, {})
    if not isinstance(block, dict):
        raise ConfigValidationError(name, "must be a table/object")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigValidationError(f"{name}.{unknown[0]}", f"unknown key (allowed: {sorted(allowed)})")
    return block


def _number(block: dict[str, Any], key: str, prefix: str, default: float | None = None) -> float | None:
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"{prefix}.{key}", f"must be a number, got {value!r}")
    return float(value)


def _integer(block: dict[str, Any], key: str, prefix: str, default: int | None = None) -> int | None:
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(f"{prefix}.{key}" if prefix else key, f"must be an integer, got {value!r}")
    return value


def _parse_problem(block: dict[str, Any]) -> tuple[SystemProblem, bool]:
    kind = block.get("domain", "interval")
    if kind not in ("interval", "rectangle"):
        raise ConfigValidationError("problem.domain", f"must be 'interval' or 'rectangle', got {kind!r}")
    extents = block.get("extents", [1.0] if kind == "interval" else [1.0, 1.0])
    if not isinstance(extents, list) or len(extents) != (1 if kind == "interval" else 2):
        raise ConfigValidationError("problem.extents", f"a {kind} needs {1 if kind == 'interval' else 2} extent(s)")
    if any(isinstance(e, bool) or not isinstance(e, (int, float)) or e <= 0 for e in extents):
        raise ConfigValidationError("problem.extents", "extents must be positive numbers")
    operator = block.get("operator", "spectral")
    if operator not in OPERATOR_KINDS:
        raise ConfigValidationError("problem.operator", f"must be one of {OPERATOR_KINDS}, got {operator!r}")
    if operator == "restricted" and kind != "interval":
        raise ConfigValidationError("problem.operator", "the restricted operator is available on intervals only")

    s = _number(block, "s", "problem")
    if s is None or not 0.0 < s < 1.0:
        raise ConfigValidationError("problem.s", f"s must satisfy 0 < s < 1, got {s}")
    p = _number(block, "p", "problem")
    if p is None or p <= 1.0:
        raise ConfigValidationError("problem.p", f"p must exceed 1, got {p}")
    q = _number(block, "q", "problem")
    if q is None or q <= 1.0:
        raise ConfigValidationError("problem.q", f"q must exceed 1, got {q}")
    lam = _number(block, "lam", "problem", 0.0)
    mu = _number(block, "mu", "problem", 0.0)
    alpha = _number(block, "alpha", "problem")
    if alpha is not None and not 0.0 < alpha < 2.0 * s:
        raise ConfigValidationError("problem.alpha", f"alpha must satisfy 0 < alpha < 2s = {2 * s}, got {alpha}")

    dimension = 1 if kind == "interval" else 2
    fallback = DEFAULT_TRUNCATION_1D if dimension == 1 else DEFAULT_TRUNCATION_2D
    truncation = _integer(block, "truncation", "problem", fallback)
    if truncation is None or truncation < 1:
        raise ConfigValidationError("problem.truncation", f"truncation K must be positive, got {truncation}")
    grid_size = _integer(block, "grid_size", "problem", default_grid_size(truncation, dimension))
    try:
        domain = ModelDomain(kind=kind, extents=tuple(float(e) for e in extents), grid_size=grid_size)
    except ResolutionError as exc:
        raise ConfigValidationError("problem.grid_size", str(exc)) from exc
    if dimension == 1 and truncation > domain.max_axis_mode:
        raise ConfigValidationError(
            "problem.grid_size", f"{grid_size} points resolve at most {domain.max_axis_mode} modes, K={truncation}"
        )

    problem = SystemProblem(
        domain=domain, operator=operator, s=s, p=p, q=q, lam=lam, mu=mu, alpha=alpha, truncation=truncation
    )
    if alpha is not None:
        return problem, False
    report = gate(problem)
    logger.info(f"alpha defaulted to the window midpoint {report.suggested_alpha:.6g}")
    return replace(problem, alpha=report.suggested_alpha), True


def _parse_sweep(block: dict[str, Any]) -> SweepConfig:
    parameter = block.get("parameter", "pq")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigValidationError("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    defaults = SweepConfig() if parameter == "pq" else SweepConfig(parameter, 0.0, 1.0, 11)
    start = _number(block, "start", "sweep", defaults.start)
    stop = _number(block, "stop", "sweep", defaults.stop)
    steps = _integer(block, "steps", "sweep", defaults.steps)
    if steps < 1:
        raise ConfigValidationError("sweep.steps", f"must be positive, got {steps}")
    if parameter == "pq" and min(start, stop) <= 1.0:
        raise ConfigValidationError("sweep.start", "p and q must exceed 1 over the whole sweep")
    if parameter == "s" and not (0.0 < start < 1.0 and 0.0 < stop < 1.0):
        raise ConfigValidationError("sweep.start", "s must satisfy 0 < s < 1 over the whole sweep")
    return SweepConfig(parameter=parameter, start=start, stop=stop, steps=steps)


def _parse_diagnostics(block: dict[str, Any]) -> DiagnosticsConfig:
    s_values = block.get("s_values", [0.25, 0.5, 0.75])
    if not isinstance(s_values, list) or not s_values:
        raise ConfigValidationError("diagnostics.s_values", "must be a nonempty list")
    for s in s_values:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 < s < 1.0:
            raise ConfigValidationError("diagnostics.s_values", f"s must satisfy 0 < s < 1, got {s!r}")
    intervals = _integer(block, "intervals", "diagnostics", 512)
    if intervals < 16:
        raise ConfigValidationError("diagnostics.intervals", f"needs at least 16 intervals, got {intervals}")
    levels = _integer(block, "levels", "diagnostics", 3)
    if levels < 2:
        raise ConfigValidationError("diagnostics.levels", f"needs at least 2 refinement levels, got {levels}")
    return DiagnosticsConfig(s_values=tuple(float(s) for s in s_values), intervals=intervals, levels=levels)


def parse_config(text: str) -> RunConfig:
    data = _load(text)
    unknown = sorted(set(data) - _TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigValidationError(unknown[0], f"unknown key (allowed: {sorted(_TOP_LEVEL_KEYS)})")
    command = data.get("command", "solve")
    if command not in COMMANDS:
        raise ConfigValidationError("command", f"must be one of {COMMANDS}, got {command!r}")
    seed = _integer(data, "seed", "", DEFAULT_SEED)
    if seed < 0:
        raise ConfigValidationError("seed", f"must be nonnegative, got {seed}")
    if "problem" not in data:
        raise ConfigValidationError("problem", "the [problem] block is required")

    problem, alpha_defaulted = _parse_problem(_block(data, "problem", _PROBLEM_KEYS))
    output = _block(data, "output", _OUTPUT_KEYS)
    return RunConfig(
        problem=problem,
        command=command,
        seed=seed,
        sweep=_parse_sweep(_block(data, "sweep", _SWEEP_KEYS)),
        diagnostics=_parse_diagnostics(_block(data, "diagnostics", _DIAGNOSTICS_KEYS)),
        output_dir=str(output.get("directory", OUTPUT_DIR)),
        alpha_defaulted=alpha_defaulted,
    )
