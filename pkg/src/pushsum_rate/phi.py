"""Exact second-moment operator of one gossip round and its eigen form.

For the deviation state X_t = E[(x_t - mean)(x_t - mean)^T] one round
maps X to Phi*(X) = E[A X A^T] with A = I - D + C, D = diag of column
sums of the random transmission matrix C. All expectations reduce to
closed forms in the mixing matrix P, per-node send rates q_i, second
moments r_i, and the two pair coefficients alpha (cross-sender) and beta
(within-sender). The closed forms require unit column sums of P.

On vertex-transitive graphs the trace of the iteration obeys a scalar
recursion per eigenvalue, mu_{t+1,j} = delta_j mu_{t,j} + (q^2/n) b_j
sum_i mu_{t,i}, which is the cross-check used against the full operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graphs import MixingMatrix
from .params import CorrelationParams
from .rate import SecularCoefficients

__all__ = [
    "PhiModel",
    "SymMatrixState",
    "PhiTrajectory",
    "MuTrajectory",
    "PhiPropertyFailure",
    "PhiPropertyReport",
    "homogeneous_phi_model",
    "phi_model_from_params",
    "psi",
    "psi_inv",
    "expect_dxc",
    "expect_dxd",
    "expect_cxc",
    "phi_star",
    "iterate_phi",
    "eigen_recursion",
    "check_phi_properties",
]

_COLSUM_TOL = 1e-10
_OVERFLOW = 1e300


@dataclass(frozen=True, eq=False)
class PhiModel:
    """Mixing matrix plus per-node moment diagonals for the operator.

    c is the common off-diagonal level when known; a nonzero beta
    requires the two-valued {0, c} mixing structure.
    """

    p: np.ndarray = field(repr=False)
    qdiag: np.ndarray = field(repr=False)
    rdiag: np.ndarray = field(repr=False)
    alpha: float
    beta: float
    c: float | None = None

    def __post_init__(self) -> None:
        self.p.setflags(write=False)
        self.qdiag.setflags(write=False)
        self.rdiag.setflags(write=False)
        if self.beta != 0.0 and self.c is not None:
            lev = self.c
            ok = np.all(
                (self.p == 0.0) | (np.abs(self.p - lev) <= 1e-12 * max(1.0, lev))
            )
            if not ok:
                raise ValidationError(
                    "beta != 0 requires a two-valued {0, c} mixing matrix"
                )

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def homogeneous(self) -> bool:
        return bool(
            np.all(self.qdiag == self.qdiag[0])
            and np.all(self.rdiag == self.rdiag[0])
        )


@dataclass(frozen=True, eq=False)
class SymMatrixState:
    """One step of the operator iteration."""

    t: int
    matrix: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class PhiTrajectory:
    """Operator iterates: traces always, full states optionally."""

    traces: np.ndarray
    states: tuple[SymMatrixState, ...] | None
    log_slope: float | None
    diverged: bool


@dataclass(frozen=True, eq=False)
class MuTrajectory:
    """Per-eigenvalue weights mu_t (rows are steps) and their sums."""

    mu: np.ndarray
    eigenvalues: np.ndarray | None = None

    @property
    def traces(self) -> np.ndarray:
        return self.mu.sum(axis=1)


@dataclass(frozen=True, eq=False)
class PhiPropertyFailure:
    prop: str
    trial: int
    magnitude: float
    witness: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class PhiPropertyReport:
    trials: int
    counts: dict[str, int]
    failures: tuple[PhiPropertyFailure, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def _as_entries(p: MixingMatrix | np.ndarray) -> np.ndarray:
    if isinstance(p, MixingMatrix):
        return np.array(p.entries, dtype=np.float64)
    arr = np.array(p, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"mixing matrix must be square, got {arr.shape}")
    return arr


def homogeneous_phi_model(
    p: MixingMatrix | np.ndarray, q: float, r: float, alpha: float, beta: float
) -> PhiModel:
    """Model with constant per-node rates (operator-native units)."""
    entries = _as_entries(p)
    n = entries.shape[0]
    return PhiModel(
        p=entries,
        qdiag=np.full(n, float(q)),
        rdiag=np.full(n, float(r)),
        alpha=float(alpha),
        beta=float(beta),
        c=p.c if isinstance(p, MixingMatrix) else None,
    )


def phi_model_from_params(
    p: MixingMatrix | np.ndarray, params: CorrelationParams
) -> PhiModel:
    """Map bound-side parameters (q, r, alpha, beta, u) to operator units.

    The mean-square intensity u rescales the sent mass: the operator sees
    send rate q sqrt(u), relative second moment r / sqrt(u), and pair
    coefficients alpha/u, beta/u. Per-node vectors, when present,
    replace the constant q and r before scaling.
    """
    entries = _as_entries(p)
    n = entries.shape[0]
    su = params.sqrt_u
    qv = (
        np.asarray(params.q_nodes, dtype=np.float64)
        if params.q_nodes is not None
        else np.full(n, params.q)
    )
    rv = (
        np.asarray(params.r_nodes, dtype=np.float64)
        if params.r_nodes is not None
        else np.full(n, params.r)
    )
    if qv.shape != (n,) or rv.shape != (n,):
        raise ValidationError("per-node vectors must have one entry per node")
    return PhiModel(
        p=entries,
        qdiag=qv * su,
        rdiag=rv / su,
        alpha=params.alpha / params.u,
        beta=params.beta / params.u,
        c=p.c if isinstance(p, MixingMatrix) else None,
    )


def psi(x: np.ndarray) -> np.ndarray:
    """Diagonal of a matrix as a vector."""
    return np.diagonal(x).copy()


def psi_inv(v: np.ndarray) -> np.ndarray:
    """Vector as a diagonal matrix."""
    return np.diag(np.asarray(v, dtype=np.float64))


def _check_colsums(p: np.ndarray) -> None:
    defect = float(np.abs(p.sum(axis=0) - 1.0).max())
    if defect > _COLSUM_TOL:
        raise ValidationError(
            "closed-form moment expressions require unit column sums; "
            f"max defect {defect:.3e}"
        )


def expect_dxc(m: PhiModel, x: np.ndarray) -> np.ndarray:
    """E[D X C^T] in closed form.

    Splitting X into its diagonal part and the rest X0, the cross-sender
    coefficient hits Q X0 Q P^T while the diagonal part splits into the
    within-sender piece (with its self-pair exclusion on P .* P) and the
    same-edge second-moment piece.
    """
    p = m.p
    qd, rd = m.qdiag, m.rdiag
    psx = np.diagonal(x)
    x0 = x - np.diag(psx)
    d_beta = qd * qd * psx
    d_second = qd * qd * rd * rd * psx
    out = m.alpha * ((qd[:, None] * x0 * qd[None, :]) @ p.T)
    out += m.beta * (d_beta[:, None] * p.T)
    out -= m.beta * (d_beta[:, None] * (p * p).T)
    out += d_second[:, None] * p.T
    return out


def expect_dxd(m: PhiModel, x: np.ndarray) -> np.ndarray:
    """E[D X D] in closed form; D = diag of column sums of C."""
    p = m.p
    qd, rd = m.qdiag, m.rdiag
    psx = np.diagonal(x)
    x0 = x - np.diag(psx)
    colsq = (p * p).sum(axis=0)
    diag = m.beta * psx * qd * qd * (1.0 - colsq) + qd * qd * rd * rd * psx
    return m.alpha * (qd[:, None] * x0 * qd[None, :]) + np.diag(diag)


def expect_cxc(m: PhiModel, x: np.ndarray) -> np.ndarray:
    """E[C X C^T] in closed form."""
    p = m.p
    qd, rd = m.qdiag, m.rdiag
    psx = np.diagonal(x)
    x0 = x - np.diag(psx)
    d_beta = qd * qd * psx
    d_second = qd * qd * rd * rd * psx
    out = m.alpha * (p @ (qd[:, None] * x0 * qd[None, :]) @ p.T)
    out += m.beta * ((p * d_beta[None, :]) @ p.T)
    out -= m.beta * np.diag((p * p) @ d_beta)
    out += np.diag(p @ d_second)
    return out


def phi_star(m: PhiModel, x: np.ndarray) -> np.ndarray:
    """One application of the second-moment operator X -> E[A X A^T]."""
    _check_colsums(m.p)
    p = m.p
    qd = m.qdiag
    qx = qd[:, None] * x
    xq = x * qd[None, :]
    out = x - qx + p @ qx - xq + xq @ p.T
    out += expect_dxd(m, x)
    out -= expect_dxc(m, x)
    out -= expect_dxc(m, x.T).T
    out += expect_cxc(m, x)
    return out


def centering_state(n: int) -> np.ndarray:
    """Default start X_0 = I - J/n: unit deviation orthogonal to consensus."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def iterate_phi(
    m: PhiModel,
    t_max: int,
    x0: np.ndarray | None = None,
    record_states: bool = False,
) -> PhiTrajectory:
    """Iterate the operator t_max steps from X_0 (default I - J/n).

    Stops early when |trace| exceeds 1e300. The log slope is fitted by
    least squares on the trailing half of the positive trace series.
    """
    x = centering_state(m.n) if x0 is None else np.array(x0, dtype=np.float64)
    traces = [float(np.trace(x))]
    states = [SymMatrixState(0, x.copy())] if record_states else None
    diverged = False
    for t in range(1, t_max + 1):
        x = phi_star(m, x)
        tr = float(np.trace(x))
        traces.append(tr)
        if states is not None:
            states.append(SymMatrixState(t, x.copy()))
        if abs(tr) > _OVERFLOW:
            diverged = True
            break
    tr_arr = np.asarray(traces)
    log_slope = None
    if not diverged:
        start = len(tr_arr) // 2
        tail = tr_arr[start:]
        ts = np.arange(start, len(tr_arr), dtype=np.float64)
        keep = tail > 0.0
        if int(keep.sum()) >= 3:
            log_slope = float(np.polyfit(ts[keep], np.log(tail[keep]), 1)[0])
    return PhiTrajectory(
        traces=tr_arr,
        states=tuple(states) if states is not None else None,
        log_slope=log_slope,
        diverged=diverged,
    )


def eigen_recursion(
    coeffs: SecularCoefficients,
    mu0: np.ndarray,
    t_max: int,
    eigenvalues: np.ndarray | None = None,
) -> MuTrajectory:
    """Scalar trace recursion mu_{t+1} = delta mu_t + (q^2/n) b sum(mu_t).

    Exact for the operator trace on vertex-transitive mixing matrices;
    mu0 pairs with the descending eigenvalues (leading entry first).
    """
    mu0 = np.asarray(mu0, dtype=np.float64)
    if mu0.shape != coeffs.delta.shape:
        raise ValidationError(
            f"mu0 has shape {mu0.shape}, expected {coeffs.delta.shape}"
        )
    scale = coeffs.q * coeffs.q / coeffs.n
    out = np.empty((t_max + 1, mu0.size))
    out[0] = mu0
    for t in range(t_max):
        out[t + 1] = coeffs.delta * out[t] + scale * coeffs.b * out[t].sum()
    return MuTrajectory(mu=out, eigenvalues=eigenvalues)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def check_phi_properties(
    m: PhiModel,
    trials: int,
    rng: np.random.Generator,
    full_eigen_max_n: int = 32,
) -> PhiPropertyReport:
    """Structural checks of the operator on random inputs.

    Per trial: transpose equivariance on a general matrix; entrywise
    nonnegativity on a nonnegative symmetric input; positive
    semidefiniteness on a Gram input (random quadratic forms, plus a full
    eigendecomposition when n <= full_eigen_max_n, minimum eigenvalue
    tolerance -1e-10); invariance of the centered class (X J = J X = 0
    and symmetry preserved). Failures carry the offending input.
    """
    from . import _kernels

    n = m.n
    counts = {"transpose": 0, "nonneg": 0, "psd": 0, "centered": 0}
    failures: list[PhiPropertyFailure] = []

    def record(prop: str, trial: int, magnitude: float, witness: np.ndarray) -> None:
        failures.append(
            PhiPropertyFailure(
                prop=prop, trial=trial, magnitude=magnitude, witness=witness
            )
        )

    for trial in range(trials):
        g = rng.standard_normal((n, n))
        y1 = phi_star(m, g)
        y2 = phi_star(m, g.T).T
        dev = float(np.abs(y1 - y2).max())
        counts["transpose"] += 1
        if dev > 1e-12 * max(1.0, float(np.abs(y1).max())):
            record("transpose", trial, dev, g)

        xpos = np.abs(_symmetrize(rng.standard_normal((n, n))))
        ypos = phi_star(m, xpos)
        low = float(ypos.min())
        counts["nonneg"] += 1
        if low < -1e-12 * max(1.0, float(np.abs(ypos).max())):
            record("nonneg", trial, low, xpos)

        root = rng.standard_normal((n, n))
        xpsd = root.T @ root
        ypsd = phi_star(m, xpsd)
        counts["psd"] += 1
        worst = 0.0
        for _ in range(8):
            w = rng.standard_normal(n)
            w /= float(np.linalg.norm(w))
            worst = min(worst, float(w @ ypsd @ w))
        if n <= full_eigen_max_n:
            vals, _, _ = _kernels.jacobi_eigh(_symmetrize(ypsd))
            worst = min(worst, float(vals.min()))
        if worst < -1e-10:
            record("psd", trial, worst, xpsd)

        s = _symmetrize(rng.standard_normal((n, n)))
        center = centering_state(n)
        xc = center @ s @ center
        yc = phi_star(m, xc)
        scale = max(1.0, float(np.abs(yc).max()))
        row_mass = float(np.abs(yc.sum(axis=1)).max())
        col_mass = float(np.abs(yc.sum(axis=0)).max())
        asym = float(np.abs(yc - yc.T).max())
        counts["centered"] += 1
        if max(row_mass, col_mass) > 1e-10 * scale * n or asym > 1e-12 * scale:
            record("centered", trial, max(row_mass, col_mass, asym), xc)

    return PhiPropertyReport(
        trials=trials, counts=counts, failures=tuple(failures)
    )
