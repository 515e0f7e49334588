"""Run configuration files.

One format: flat TOML (no tables), versioned by ``schema_version``.
``kind`` selects a single solver run (default) or a convergence sweep.

Solver keys
    required: nu, mu, alpha, N, dt, t_end
    optional: eta (0), s (2), blowup_threshold (1e6 x initial H^s norm),
    seed (0), initial_kind ("taylor_green"), diag_stride (10), cfl (0.5)
Sweep keys
    the solver keys (eta is ignored) plus etas (required list) and
    diff_stride (1)
"""

from __future__ import annotations

import dataclasses
import logging
import re
import sys
from pathlib import Path
from typing import Union

from .errors import ConfigError
from .solver import SolverConfig
from .sweep import SweepConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("solver", "sweep")

_FLOAT_KEYS = {"nu", "mu", "alpha", "dt", "t_end", "eta", "s", "blowup_threshold", "cfl"}
_INT_KEYS = {"N", "seed", "diag_stride"}
_STR_KEYS = {"initial_kind"}
SOLVER_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS
REQUIRED = ("nu", "mu", "alpha", "N", "dt", "t_end")
SWEEP_KEYS = SOLVER_KEYS | {"etas", "diff_stride"}
META_KEYS = {"schema_version", "kind"}


def _line_of(text: str, key: str):
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return n
    return None


def _coerce(key: str, value, text: str):
    line = _line_of(text, key)
    if isinstance(value, bool):
        raise ConfigError("booleans are not accepted", field=key, line=line)
    if key in _FLOAT_KEYS:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {type(value).__name__}", field=key, line=line)
        return float(value)
    if key in _INT_KEYS or key == "diff_stride":
        if not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {type(value).__name__}", field=key, line=line)
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError("expected a string", field=key, line=line)
        return value
    if key == "etas":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError("expected a list of numbers", field=key, line=line)
        return tuple(float(v) for v in value)
    raise AssertionError(key)


def parse_config_text(text: str) -> Union[SolverConfig, SweepConfig]:
    """Validate configuration text; see the module docstring for the keys."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed file: {exc}", line=getattr(exc, "lineno", None)) from None

    version = raw.get("schema_version")
    if version is None:
        raise ConfigError("missing schema_version", field="schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
                          field="schema_version", line=_line_of(text, "schema_version"))
    kind = raw.get("kind", "solver")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}", field="kind", line=_line_of(text, "kind"))

    allowed = SWEEP_KEYS if kind == "sweep" else SOLVER_KEYS
    values = {}
    for key, value in raw.items():
        if key in META_KEYS:
            continue
        if isinstance(value, dict):
            raise ConfigError("tables are not allowed; the format is flat", field=key)
        if key not in allowed:
            raise ConfigError("unknown key", field=key, line=_line_of(text, key))
        values[key] = _coerce(key, value, text)
    for key in REQUIRED:
        if key not in values:
            raise ConfigError("missing required key", field=key)

    def located(exc: ConfigError) -> ConfigError:
        if exc.field is not None and exc.line is None:
            return ConfigError(str(exc).split("] ", 1)[-1], field=exc.field, line=_line_of(text, exc.field))
        return exc

    try:
        if kind == "solver":
            return SolverConfig(**values)
        sweep_keys = {k: values.pop(k) for k in ("etas", "diff_stride") if k in values}
        if "etas" not in sweep_keys:
            raise ConfigError("missing required key", field="etas")
        if values.pop("eta", None) is not None:
            log.warning("eta is ignored in a sweep configuration")
        base = SolverConfig(**values)
        return SweepConfig(base, **sweep_keys)
    except ConfigError as exc:
        raise located(exc) from None


def parse_config(path: Union[str, Path]) -> Union[SolverConfig, SweepConfig]:
    """Read and validate a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text)


def to_text(cfg: Union[SolverConfig, SweepConfig]) -> str:
    """Serialize a configuration back to the file format."""
    if isinstance(cfg, SweepConfig):
        body = dataclasses.asdict(cfg.base)
        body.pop("eta")
        body["t_end"] = cfg.t_end
        body["etas"] = list(cfg.etas)
        body["diff_stride"] = cfg.diff_stride
        kind = "sweep"
    else:
        body = dataclasses.asdict(cfg)
        kind = "solver"
    lines = [f"schema_version = {SCHEMA_VERSION}", f'kind = "{kind}"']
    for key, value in body.items():
        if value is None:
            continue
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, list):
            lines.append(f"{key} = [{', '.join(repr(float(v)) for v in value)}]")
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"
