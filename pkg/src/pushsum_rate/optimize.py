"""Transmission-rate optimization over q for a fixed spectrum.

xi_1(q) is convex on the admissible interval when alpha >= 0, so the
minimizer is located by bisection on the sign of the closed-form
derivative. When the derivative is unavailable (root-pole separation
loss) or the coupling weights all vanish (root = max of convex
parabolas), a derivative-free golden-section search takes over; both
paths report a certificate of what was checked at the final bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import CorrelationParams
from .rate import RatePoint, largest_root, secular_coefficients
from .spectral import Spectrum

__all__ = [
    "OptimizationResult",
    "SweepRow",
    "SweepTable",
    "ConvexityReport",
    "minimize_rate",
    "sweep",
    "convexity_probe",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_CONVEXITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Minimizer of xi_1 over q with the evidence that located it.

    certificate holds the derivative values at the final bracket ends
    (None for a side that was never probed, e.g. golden-section).
    """

    q_star: float
    point: RatePoint
    iterations: int
    bracket: tuple[float, float]
    certificate: tuple[float | None, float | None]
    method: str


@dataclass(frozen=True, eq=False)
class SweepRow:
    q: float
    point: RatePoint | None
    error: str | None
    convexity_flag: str = ""


@dataclass(frozen=True, eq=False)
class SweepTable:
    rows: tuple[SweepRow, ...]
    convexity_violations: int


@dataclass(frozen=True, eq=False)
class ConvexityReport:
    violations: tuple[tuple[int, float], ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _search_interval(p: CorrelationParams) -> tuple[float, float]:
    hi = min(1.0 - 1e-6, (1.0 - 1e-9) / p.sqrt_u)
    lo = 1e-6
    if not lo < hi:
        raise ValidationError(
            f"admissible q interval is empty for u = {p.u!r}"
        )
    return lo, hi


def minimize_rate(
    s: Spectrum, p: CorrelationParams, c: float, tol: float = 1e-8
) -> OptimizationResult:
    """Minimize xi_1 over q in (0, min(1, 1/sqrt(u))) to bracket width tol.

    Boundary minima are pinned with the one-sided derivative recorded in
    the certificate. tol must lie in (0, 1e-3].
    """
    if not 0.0 < tol <= 1e-3:
        raise ValidationError(f"tol must lie in (0, 1e-3], got {tol!r}")
    lo, hi = _search_interval(p)

    b_tail = secular_coefficients(s, p, c, q=0.5).b[1:]
    if not np.any(b_tail > 0.0):
        return _golden(s, p, c, lo, hi, tol, note="all coupling weights vanish")

    def probe(q: float) -> RatePoint:
        return largest_root(
            s, p, c, q=q, with_spectral_radius=False, with_derivative=True
        )

    d_lo = probe(lo).derivative
    if d_lo is None:
        # At the left endpoint the root hugs its pole and the quotient
        # form degrades; the limiting slope -2 sqrt(u) (1 - lambda_2) is
        # exact there and strictly negative whenever lambda_2 < 1.
        slope0 = -2.0 * p.sqrt_u * (1.0 - float(s.eigenvalues[1]))
        if slope0 < 0.0:
            d_lo = slope0
        else:
            return _golden(s, p, c, lo, hi, tol, note="derivative unavailable")
    if d_lo >= 0.0:
        return OptimizationResult(
            q_star=lo,
            point=largest_root(s, p, c, q=lo),
            iterations=1,
            bracket=(lo, lo),
            certificate=(d_lo, None),
            method="pinned-left",
        )
    d_hi = probe(hi).derivative
    if d_hi is None:
        return _golden(s, p, c, lo, hi, tol, note="derivative unavailable")
    if d_hi <= 0.0:
        return OptimizationResult(
            q_star=hi,
            point=largest_root(s, p, c, q=hi),
            iterations=2,
            bracket=(hi, hi),
            certificate=(None, d_hi),
            method="pinned-right",
        )

    iterations = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        d_mid = probe(mid).derivative
        iterations += 1
        if d_mid is None:
            return _golden(s, p, c, lo, hi, tol, note="derivative unavailable")
        if d_mid < 0.0:
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    q_star = 0.5 * (lo + hi)
    return OptimizationResult(
        q_star=q_star,
        point=largest_root(s, p, c, q=q_star),
        iterations=iterations,
        bracket=(lo, hi),
        certificate=(d_lo, d_hi),
        method="derivative-bisection",
    )


def _golden(
    s: Spectrum,
    p: CorrelationParams,
    c: float,
    lo: float,
    hi: float,
    tol: float,
    note: str,
) -> OptimizationResult:
    # Unimodality holds on the fallback paths: with zero weights the root
    # is a max of convex parabolas in q, otherwise convexity is inherited.
    def f(q: float) -> float:
        return largest_root(
            s, p, c, q=q, with_spectral_radius=False, with_derivative=False
        ).xi1

    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    iterations = 2
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        iterations += 1
    q_star = 0.5 * (a + b)
    return OptimizationResult(
        q_star=q_star,
        point=largest_root(s, p, c, q=q_star),
        iterations=iterations,
        bracket=(a, b),
        certificate=(None, None),
        method=f"golden-section ({note})",
    )


def sweep(
    s: Spectrum, p: CorrelationParams, c: float, q_grid: np.ndarray
) -> SweepTable:
    """Evaluate the bound on an increasing grid of q values.

    Per-point failures are recorded in the row and the sweep continues.
    Interior rows with both neighbors evaluated get a midpoint-convexity
    flag from the second divided difference (scaled to the classic
    second difference on even grids, tolerance -1e-9).
    """
    grid = np.asarray(q_grid, dtype=np.float64)
    if grid.ndim != 1:
        raise ValidationError("q grid must be a flat vector")
    if grid.size == 0:
        return SweepTable(rows=(), convexity_violations=0)
    if np.any(grid <= 0.0) or np.any(grid >= 1.0):
        raise ValidationError("q grid values must lie in (0,1)")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise ValidationError("q grid must be strictly increasing")

    rows: list[SweepRow] = []
    for q in grid:
        try:
            pt = largest_root(
                s, p, c, q=float(q), with_spectral_radius=False
            )
            rows.append(SweepRow(q=float(q), point=pt, error=None))
        except ValidationError as exc:
            rows.append(SweepRow(q=float(q), point=None, error=str(exc)))

    flags = [""] * len(rows)
    violations = 0
    for i in range(1, len(rows) - 1):
        trio = rows[i - 1 : i + 2]
        if any(r.point is None for r in trio):
            continue
        d2 = _second_difference(
            [r.q for r in trio], [r.point.xi1 for r in trio]
        )
        if d2 >= -_CONVEXITY_TOL:
            flags[i] = "ok"
        else:
            flags[i] = "violation"
            violations += 1
    rows = [
        SweepRow(r.q, r.point, r.error, flag) for r, flag in zip(rows, flags)
    ]
    return SweepTable(rows=tuple(rows), convexity_violations=violations)


def _second_difference(qs: list[float], fs: list[float]) -> float:
    h1 = qs[1] - qs[0]
    h2 = qs[2] - qs[1]
    divided = ((fs[2] - fs[1]) / h2 - (fs[1] - fs[0]) / h1) / (h1 + h2)
    return 2.0 * divided * h1 * h2


def convexity_probe(
    qs: np.ndarray, xi1s: np.ndarray, tol: float = _CONVEXITY_TOL
) -> ConvexityReport:
    """Second-difference convexity check over a sampled curve.

    Needs at least three points; returns the interior indices whose
    second difference drops below -tol.
    """
    q = np.asarray(qs, dtype=np.float64)
    f = np.asarray(xi1s, dtype=np.float64)
    if q.shape != f.shape or q.ndim != 1 or q.size < 3:
        raise ValidationError("convexity probe needs >= 3 aligned points")
    violations: list[tuple[int, float]] = []
    for i in range(1, q.size - 1):
        d2 = _second_difference(list(q[i - 1 : i + 2]), list(f[i - 1 : i + 2]))
        if d2 < -tol:
            violations.append((i, float(d2)))
    return ConvexityReport(violations=tuple(violations))
