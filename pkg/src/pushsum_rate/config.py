"""Flat key=value run configuration with CLI override precedence.

The file format is one `key = value` pair per line, '#' line comments
and blank lines allowed. Keys mirror the CLI flags (dashes become
underscores). Unknown keys are rejected so typos surface immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import IO

from .errors import InputFormatError

__all__ = ["RunConfig", "load_config_file", "merge_config"]

_CHOICES = {
    "graph_format": ("edge-list", "adjacency"),
    "mixing": ("uniform-c", "row-stochastic-regular"),
    "output": ("csv", "json"),
    "protocol": ("broadcast", "unicast"),
}


@dataclass
class RunConfig:
    """Everything a subcommand needs; None means "not provided"."""

    graph: str | None = None
    graph_format: str = "edge-list"
    mixing: str = "uniform-c"
    c: float | None = None
    q: float | None = None
    r: float | None = None
    alpha: float = 0.0
    beta: float = 0.0
    u: float = 1.0
    seed: int = 0
    output: str = "json"
    out: str | None = None
    tol: float = 1e-8
    verify_grid: int = 0
    q_start: float = 0.05
    q_stop: float = 0.95
    q_points: int = 19
    protocol: str | None = None
    w: float | None = None
    runs: int = 32
    steps: int = 10_000
    samples: int = 100_000
    window: float = 0.5
    dump_x: int = 0


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_FLOAT_KEYS = {
    "c", "q", "r", "alpha", "beta", "u", "tol", "q_start", "q_stop", "w",
    "window",
}
_INT_KEYS = {"seed", "verify_grid", "q_points", "runs", "steps", "samples", "dump_x"}
_STR_KEYS = {"graph", "graph_format", "mixing", "output", "out", "protocol"}


def _convert(key: str, raw: str, line_no: int) -> object:
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise InputFormatError(
            f"value {raw!r} for key {key!r} is not numeric", line=line_no
        ) from None
    if key in _CHOICES and raw not in _CHOICES[key]:
        raise InputFormatError(
            f"key {key!r} must be one of {_CHOICES[key]}, got {raw!r}",
            line=line_no,
        )
    return raw


def load_config_file(source: IO[str] | str) -> dict[str, object]:
    """Parse a key=value file into typed values; unknown keys rejected."""
    close = False
    if isinstance(source, str):
        stream = open(source, "r", encoding="utf-8")
        close = True
    else:
        stream = source
    try:
        out: dict[str, object] = {}
        for line_no, line in enumerate(stream, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise InputFormatError(
                    f"expected key=value, got {text!r}", line=line_no
                )
            key, _, raw = text.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            if key not in _FIELD_TYPES:
                raise InputFormatError(f"unknown key {key!r}", line=line_no)
            if key in out:
                raise InputFormatError(f"duplicate key {key!r}", line=line_no)
            out[key] = _convert(key, raw, line_no)
        return out
    finally:
        if close:
            stream.close()


def merge_config(
    file_values: dict[str, object], cli_values: dict[str, object]
) -> RunConfig:
    """Defaults, then config file, then explicit CLI flags."""
    cfg = RunConfig()
    for key, value in file_values.items():
        setattr(cfg, key, value)
    for key, value in cli_values.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg
