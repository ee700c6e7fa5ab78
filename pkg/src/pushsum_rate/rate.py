"""Closed-form convergence-rate bound from the mixing spectrum.

The second-moment contraction factor xi_1 is the largest root of

    f(xi) = prod_{j>1} (xi - delta_j) * sigma(xi),
    sigma(xi) = 1 - (q^2/n) * sum_{j>1} b_j / (xi - delta_j),

where delta_j is a per-eigenvalue contraction coefficient and b_j a
nonnegative coupling weight. sigma is strictly increasing between
consecutive poles and above the top pole, so every root is bracketed and
bisection plus Newton polishing finds them all without any dense
eigensolver. The half-log of xi_1 bounds the almost-sure decay rate of
the push-sum error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalInvariantError, SeparationError, ValidationError
from .params import CorrelationParams
from .spectral import Spectrum

__all__ = [
    "SecularCoefficients",
    "RatePoint",
    "EndpointSlopes",
    "secular_coefficients",
    "delta_derivative",
    "secular_value",
    "largest_root",
    "largest_root_from_coefficients",
    "secular_roots_all",
    "companion_matrix",
    "xi_derivative",
    "endpoint_slopes",
    "delta_argmax_check",
]

# Poles closer than this merge into one weighted pole before bracketing.
_MERGE_TOL = 1e-13
# Newton aims for |sigma| at this level; near-pole roots saturate at the
# floating-point localization floor instead (see _polish).
_SIGMA_TARGET = 1e-14
_BISECT_WIDTH = 1e-12
_NEWTON_STEPS = 80


@dataclass(frozen=True, eq=False)
class SecularCoefficients:
    """Pole positions delta, weights b, and the q they were built at.

    Arrays cover all n eigenvalues in descending-eigenvalue order; index 0
    belongs to the leading eigenvalue and is excluded from every sum. An
    eigenvalue at exactly 1 contributes delta = 1, b = 0.
    """

    delta: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    q: float
    n: int

    def __post_init__(self) -> None:
        self.delta.setflags(write=False)
        self.b.setflags(write=False)


@dataclass(frozen=True, eq=False)
class RatePoint:
    """Bound evaluation at one q: root, half-log rate, and diagnostics.

    gamma_half is None when xi1 <= 0 (log undefined). warnings flag
    results that do not certify contraction; notes carry informational
    diagnostics that do not affect validity.
    """

    q: float
    xi1: float
    gamma_half: float | None
    spectral_radius: float | None
    derivative: float | None
    warnings: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class EndpointSlopes:
    """One-sided slopes of q -> xi_1(q) at q -> 0+ and q -> 1-.

    at_one is None when the closed form degenerates (zero weights or a
    non-contracting delta at the right endpoint). The tangent line at 0
    is a global lower bound on the root curve by convexity.
    """

    at_zero: float
    at_one: float | None

    def tangent(self, q):
        return 1.0 + self.at_zero * np.asarray(q, dtype=np.float64)


def secular_coefficients(
    s: Spectrum, p: CorrelationParams, c: float, q: float | None = None
) -> SecularCoefficients:
    """Build (delta_j, b_j) from the spectrum and moment parameters.

    delta_j = 1 - 2 q sqrt(u) (1 - lambda_j) + alpha q^2 (1 - lambda_j)^2
    b_j = (1 - lambda_j) ((beta - alpha)(1 - lambda_j) - beta c + 2 r^2)
    """
    qq = p.q if q is None else float(q)
    lam = s.eigenvalues
    one_m = 1.0 - lam
    su = p.sqrt_u
    delta = 1.0 - 2.0 * qq * su * one_m + p.alpha * qq * qq * one_m * one_m
    b = one_m * ((p.beta - p.alpha) * one_m - p.beta * c + 2.0 * p.r * p.r)
    return SecularCoefficients(delta=delta, b=b, q=qq, n=s.n)


def delta_derivative(s: Spectrum, p: CorrelationParams, q: float) -> np.ndarray:
    """d(delta_j)/dq = -2 sqrt(u) (1-lambda_j) + 2 alpha q (1-lambda_j)^2."""
    one_m = 1.0 - s.eigenvalues
    return -2.0 * p.sqrt_u * one_m + 2.0 * p.alpha * q * one_m * one_m


def secular_value(xi: float, coeffs: SecularCoefficients) -> float:
    """Evaluate sigma(xi). Raises SeparationError at a weighted pole."""
    d = coeffs.delta[1:]
    b = coeffs.b[1:]
    live = b != 0.0
    gaps = xi - d[live]
    if gaps.size and float(np.abs(gaps).min()) < 1e-300:
        raise SeparationError(f"sigma evaluated at a pole: xi = {xi!r}")
    scale = coeffs.q * coeffs.q / coeffs.n
    return 1.0 - scale * float(np.sum(b[live] / gaps))


def _check_weights(coeffs: SecularCoefficients) -> np.ndarray:
    """Weights (q^2/n) b_j for j > 1, clamping roundoff-negative entries."""
    b = coeffs.b[1:]
    scale = max(1.0, float(np.abs(b).max())) if b.size else 1.0
    if b.size and float(b.min()) < -1e-12 * scale:
        raise ValidationError(
            f"negative coupling weight b = {float(b.min())!r}; the root "
            "bracketing requires b_j >= 0 (parameters outside the "
            "guaranteed regime)"
        )
    w = np.clip(b, 0.0, None) * (coeffs.q * coeffs.q / coeffs.n)
    return w


def _merge_poles(
    d: np.ndarray, w: np.ndarray, merge_tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cluster weighted poles closer than merge_tol.

    Returns (merged positions ascending, merged weights, repeated cluster
    positions) where a k-pole cluster leaves k-1 copies of its position
    behind as exact roots of the polynomial form.
    """
    order = np.argsort(d, kind="stable")
    d = d[order]
    w = w[order]
    pos: list[float] = []
    wt: list[float] = []
    repeats: list[float] = []
    i = 0
    m = d.size
    while i < m:
        j = i + 1
        while j < m and d[j] - d[j - 1] <= merge_tol:
            j += 1
        cluster_d = d[i:j]
        cluster_w = w[i:j]
        total = float(cluster_w.sum())
        center = float(np.average(cluster_d, weights=cluster_w))
        pos.append(center)
        wt.append(total)
        repeats.extend([center] * (j - i - 1))
        i = j
    return np.asarray(pos), np.asarray(wt), np.asarray(repeats)


def _sigma_merged(x: float, d: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    gaps = x - d
    terms = w / gaps
    return 1.0 - float(terms.sum()), float(np.sum(terms / gaps))


def _polish(
    x: float, lo: float, hi: float, d: np.ndarray, w: np.ndarray
) -> float:
    """Safeguarded Newton on sigma with bisection fallback.

    Rejected Newton steps (sub-ulp moves round onto a bracket endpoint)
    fall back to halving, so the budget covers full bisection from the
    initial bracket down to float resolution.
    """
    eps = float(np.finfo(np.float64).eps)
    best_x, best_val, best_der = x, math.inf, 1.0
    for _ in range(_NEWTON_STEPS):
        val, der = _sigma_merged(x, d, w)
        if abs(val) < abs(best_val):
            best_x, best_val, best_der = x, val, der
        if abs(val) <= _SIGMA_TARGET:
            return x
        if val < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 2.0 * eps * max(1.0, abs(x)):
            break
        step = x - val / der
        x = step if lo < step < hi else 0.5 * (lo + hi)
    # Near a pole sigma' blows up and |sigma| saturates at the floating
    # point localization floor; accept when x is resolved to a few ulp.
    floor = 8.0 * eps * best_der * max(1.0, abs(best_x))
    if abs(best_val) > max(_SIGMA_TARGET * 10.0, floor):
        raise InternalInvariantError(
            f"secular root polish stalled: sigma({best_x!r}) = {best_val!r}"
        )
    return best_x


def _top_root(d: np.ndarray, w: np.ndarray) -> float:
    """Unique root of merged sigma above the largest pole."""
    dmax = float(d[-1])
    lo = dmax
    hi = dmax + float(w.sum()) + 1.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if _sigma_merged(mid, d, w)[0] < 0.0:
            lo = mid
        else:
            hi = mid
    if not lo < hi:  # pragma: no cover - bisection cannot invert a bracket
        raise InternalInvariantError("secular bracket collapsed")
    return _polish(0.5 * (lo + hi), lo, hi, d, w)


def largest_root_from_coefficients(
    coeffs: SecularCoefficients,
    merge_tol: float = _MERGE_TOL,
    ddelta: np.ndarray | None = None,
    with_spectral_radius: bool = True,
) -> RatePoint:
    """Largest root of f plus derived quantities as a RatePoint.

    With all weights zero (q = 0 included) the root is exactly the
    largest delta_j, j > 1. Otherwise the secular root above the top
    weighted pole competes with any larger zero-weight delta. The
    optional ddelta vector (same layout as coeffs.delta) enables the
    derivative; separation failure downgrades it to None with a warning
    rather than raising.
    """
    w_all = _check_weights(coeffs)
    d_all = coeffs.delta[1:]
    live = w_all > 0.0
    bare = d_all[~live]
    warnings: list[str] = []
    notes: list[str] = []
    derivative: float | None = None

    if not live.any():
        k = 1 + int(np.argmax(d_all))
        xi1 = float(coeffs.delta[k])
        notes.append("all coupling weights vanish; root is the largest delta_j")
        if ddelta is not None:
            derivative = float(ddelta[k])
    else:
        d_m, w_m, _ = _merge_poles(d_all[live], w_all[live], merge_tol)
        xi_sec = _top_root(d_m, w_m)
        bare_max = float(bare.max()) if bare.size else -math.inf
        if bare_max > xi_sec:
            xi1 = bare_max
            notes.append(
                "largest root is a bare pole (zero coupling weight) above "
                "the secular root"
            )
            if ddelta is not None:
                k = 1 + int(np.argmax(np.where(live, -np.inf, d_all)))
                derivative = float(ddelta[k])
        else:
            xi1 = xi_sec
            if ddelta is not None:
                try:
                    derivative = xi_derivative(xi1, coeffs, ddelta)
                except SeparationError as exc:
                    warnings.append(f"derivative unavailable: {exc}")

    if 0.0 < xi1 <= 1.0:
        gamma_half = 0.5 * math.log(xi1)
    else:
        gamma_half = None
        if xi1 <= 0.0:
            warnings.append(f"xi1 = {xi1!r} <= 0; half-log rate undefined")
        else:
            warnings.append(f"xi1 = {xi1!r} > 1; no contraction certified")

    spectral_radius = None
    if with_spectral_radius:
        roots = secular_roots_all(coeffs, merge_tol)
        spectral_radius = float(np.abs(roots).max()) if roots.size else xi1

    return RatePoint(
        q=coeffs.q,
        xi1=xi1,
        gamma_half=gamma_half,
        spectral_radius=spectral_radius,
        derivative=derivative,
        warnings=tuple(warnings),
        notes=tuple(notes),
    )


def secular_roots_all(
    coeffs: SecularCoefficients, merge_tol: float = _MERGE_TOL
) -> np.ndarray:
    """All n-1 roots of f, ascending: one per gap between consecutive
    merged poles, one above the top pole, plus zero-weight and merged
    duplicate pole positions, which are roots of the polynomial form."""
    w_all = _check_weights(coeffs)
    d_all = coeffs.delta[1:]
    live = w_all > 0.0
    parts: list[np.ndarray] = [d_all[~live]]
    if live.any():
        d_m, w_m, repeats = _merge_poles(d_all[live], w_all[live], merge_tol)
        parts.append(repeats)
        if d_m.size > 1:
            lo = d_m[:-1].copy()
            hi = d_m[1:].copy()
            with np.errstate(divide="ignore"):
                for _ in range(90):
                    mid = 0.5 * (lo + hi)
                    sig = 1.0 - (w_m[None, :] / (mid[:, None] - d_m[None, :])).sum(
                        axis=1
                    )
                    neg = sig < 0.0
                    lo = np.where(neg, mid, lo)
                    hi = np.where(neg, hi, mid)
                    if float((hi - lo).max()) <= 1e-30:
                        break
            parts.append(0.5 * (lo + hi))
        parts.append(np.asarray([_top_root(d_m, w_m)]))
    return np.sort(np.concatenate(parts))


def companion_matrix(coeffs: SecularCoefficients) -> np.ndarray:
    """(n-1) x (n-1) matrix whose eigenvalues are the roots of f:
    diag(delta_j) plus the rank-one coupling (q^2/n) b 1^T."""
    d = coeffs.delta[1:]
    b = coeffs.b[1:]
    return np.diag(d) + (coeffs.q * coeffs.q / coeffs.n) * np.outer(
        b, np.ones_like(b)
    )


def xi_derivative(
    point: "RatePoint | float", coeffs: SecularCoefficients, ddelta: np.ndarray
) -> float:
    """d(xi_1)/dq by implicit differentiation of sigma(xi_1, q) = 0.

        xi_1' = [ (2/q) S_1 + S_d ] / S_2,   S_1 = sum b/(xi-delta),
        S_d = sum b delta'/(xi-delta)^2,     S_2 = sum b/(xi-delta)^2

    (common factor q^2/n cancels). Requires the root separated from every
    weighted pole by more than 1e-13; assumes the secular-root branch.
    """
    xi1 = point.xi1 if isinstance(point, RatePoint) else float(point)
    d = coeffs.delta[1:]
    b = coeffs.b[1:]
    dd = ddelta[1:]
    live = b != 0.0
    if not live.any():
        raise ValidationError(
            "derivative quotient undefined: all coupling weights vanish"
        )
    if coeffs.q == 0.0:
        raise ValidationError("implicit derivative undefined at q = 0")
    gaps = xi1 - d[live]
    if float(gaps.min()) <= 1e-13:
        raise SeparationError(
            f"root-pole separation {float(gaps.min())!r} below 1e-13; "
            "derivative quotient is unstable"
        )
    bl = b[live]
    s1 = float(np.sum(bl / gaps))
    s2 = float(np.sum(bl / gaps**2))
    sd = float(np.sum(bl * dd[live] / gaps**2))
    return ((2.0 / coeffs.q) * s1 + sd) / s2


def endpoint_slopes(s: Spectrum, p: CorrelationParams, c: float) -> EndpointSlopes:
    """Closed-form one-sided slopes of the root curve at q = 0 and q = 1.

    At 0+ the root tracks the pole of the second eigenvalue, giving
    -2 sqrt(u) (1 - lambda_2). At 1- the slope is a weight-averaged
    quotient that requires every delta_j(1) below 1 and the smallest
    eigenvalue strictly above -1.
    """
    lam = s.eigenvalues
    if s.n < 2:
        raise ValidationError("endpoint slopes need at least two eigenvalues")
    if float(lam[-1]) <= -1.0 + 1e-12:
        raise ValidationError(
            "endpoint slope formulas require the smallest eigenvalue "
            f"strictly above -1; got {float(lam[-1])!r}"
        )
    su = p.sqrt_u
    at_zero = -2.0 * su * (1.0 - float(lam[1]))
    one_m = 1.0 - lam[1:]
    b = (
        one_m
        * ((p.beta - p.alpha) * one_m - p.beta * c + 2.0 * p.r * p.r)
    )
    d = 2.0 * su * one_m - p.alpha * one_m * one_m
    at_one: float | None = None
    if float(d.min()) > 1e-12:
        den = float(np.sum(b / d**2))
        if den > 0.0:
            at_one = 2.0 * su * float(np.sum(one_m * b / d**2)) / den
    return EndpointSlopes(at_zero=at_zero, at_one=at_one)


def delta_argmax_check(s: Spectrum, p: CorrelationParams) -> bool:
    """True when alpha <= 2 sqrt(u) / (3 + 1/(n-1)), the sufficient
    condition for the top pole to stay the one of the second eigenvalue
    across all q in (0,1)."""
    return p.alpha <= 2.0 * p.sqrt_u / (3.0 + 1.0 / (s.n - 1))


def largest_root(
    s: Spectrum,
    p: CorrelationParams,
    c: float,
    q: float | None = None,
    with_spectral_radius: bool = True,
    with_derivative: bool = True,
    merge_tol: float = _MERGE_TOL,
) -> RatePoint:
    """Bound evaluation pipeline: coefficients, root, rate, diagnostics.

    q defaults to the one inside the parameters; q in [0, 1] accepted
    (q = 0 gives xi1 = 1 exactly). Spectrum-dependent diagnostics are
    attached as notes; they never change the computed root.
    """
    qq = p.q if q is None else float(q)
    coeffs = secular_coefficients(s, p, c, qq)
    ddelta = delta_derivative(s, p, qq) if with_derivative else None
    point = largest_root_from_coefficients(
        coeffs,
        merge_tol=merge_tol,
        ddelta=ddelta,
        with_spectral_radius=with_spectral_radius,
    )
    notes = list(point.notes)
    head = float(np.min(1.0 - s.eigenvalues[1:] - c)) if s.n > 1 else 0.0
    if head < 0.0:
        notes.append(
            f"min_j (1 - lambda_j - c) = {head:.3e} < 0; the per-eigenvalue "
            "contraction heuristic does not apply (bound still exact)"
        )
    if not delta_argmax_check(s, p):
        notes.append(
            "alpha exceeds the argmax threshold; the dominant pole may "
            "switch away from the second eigenvalue at large q"
        )
    if point.notes == tuple(notes):
        return point
    return RatePoint(
        q=point.q,
        xi1=point.xi1,
        gamma_half=point.gamma_half,
        spectral_radius=point.spectral_radius,
        derivative=point.derivative,
        warnings=point.warnings,
        notes=tuple(notes),
    )
