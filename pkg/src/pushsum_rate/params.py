"""Correlation-moment parameters of the protocol family and their checks.

The homogeneous model is described by five scalars: activation rate q,
second-moment level r, cross-sender coefficient alpha, within-sender
coefficient beta, and the mean-square intensity u (sqrt(u) scales the
mean sent mass). Optional per-node vectors q_i, r_i feed only the exact
second-moment operator, never the rate bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graphs import MixingMatrix

__all__ = ["CorrelationParams", "validate_params", "require_valid"]


@dataclass(frozen=True, eq=False)
class CorrelationParams:
    """Moment parameters; immutable. See ``validate_params`` for the rules."""

    q: float
    r: float
    alpha: float
    beta: float
    u: float = 1.0
    q_nodes: np.ndarray | None = field(default=None, repr=False)
    r_nodes: np.ndarray | None = field(default=None, repr=False)

    @property
    def sqrt_u(self) -> float:
        return math.sqrt(self.u)


def validate_params(
    p: CorrelationParams, c: float, mixing: MixingMatrix | None = None
) -> tuple[str, ...]:
    """Collect named constraint violations; empty tuple means valid.

    Checked: q in (0,1), r in (0,1), u > 0, alpha >= 0,
    beta*c <= r^2, q*sqrt(u) < 1, beta - alpha >= -1, and (when a mixing
    matrix is supplied) beta != 0 only with two-valued {0, c} entries.
    Spectrum-dependent diagnostics live with the rate evaluation instead.
    """
    out: list[str] = []
    if not (0.0 < p.q < 1.0):
        out.append(f"q in (0,1): got q={p.q!r}")
    if not (0.0 < p.r < 1.0):
        out.append(f"r in (0,1): got r={p.r!r}")
    if not p.u > 0.0:
        out.append(f"u > 0: got u={p.u!r}")
    if not (0.0 < c < 1.0):
        out.append(f"c in (0,1): got c={c!r}")
    if p.alpha < 0.0:
        out.append(f"alpha >= 0: got alpha={p.alpha!r}")
    if p.beta * c > p.r**2 + 1e-12:
        out.append(
            f"beta*c <= r^2: got beta*c={p.beta * c!r} > r^2={p.r**2!r}"
        )
    if p.u > 0 and not p.q * math.sqrt(p.u) < 1.0:
        out.append(f"q*sqrt(u) < 1: got q*sqrt(u)={p.q * math.sqrt(p.u)!r}")
    if p.beta - p.alpha < -1.0:
        out.append(f"beta - alpha >= -1: got {p.beta - p.alpha!r}")
    if p.beta != 0.0 and mixing is not None:
        ent = mixing.entries
        two_valued = np.all((ent == 0.0) | (np.abs(ent - mixing.c) <= 1e-12 * max(1.0, mixing.c)))
        if not two_valued:
            out.append("beta != 0 requires a two-valued {0, c} mixing matrix")
    for name, vec in (("q_nodes", p.q_nodes), ("r_nodes", p.r_nodes)):
        if vec is not None:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                out.append(f"{name} must be a flat vector")
            elif not np.all((arr > 0.0) & (arr < 1.0)):
                out.append(f"{name} entries must lie in (0,1)")
    return tuple(out)


def require_valid(
    p: CorrelationParams, c: float, mixing: MixingMatrix | None = None
) -> CorrelationParams:
    """Raise ValidationError listing every violated constraint by name."""
    violations = validate_params(p, c, mixing)
    if violations:
        raise ValidationError(
            "invalid parameters: " + "; ".join(violations), violations=violations
        )
    return p
