"""Monte Carlo push-sum runs and moment estimation for two protocols.

Broadcast: each active node sends mass w down every incident edge.
Unicast: each active node sends mass w to one uniformly chosen neighbor.
Both yield homogeneous correlation structure on the uniform mixing
matrix; their moment parameters have closed forms used to cross-check
the fitted values. Stepping consumes pre-drawn uniform arrays so the
compiled and pure kernels follow identical sample paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError
from .graphs import MixingMatrix
from .params import CorrelationParams

__all__ = [
    "ProtocolSpec",
    "PushSumRun",
    "MomentEstimate",
    "protocol_params",
    "sample_c",
    "build_a",
    "run_pushsum",
    "estimate_moments",
    "phi_star_mc",
    "empirical_rate",
]

_KINDS = ("broadcast", "unicast")


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol kind, per-edge mass w, activation rate q, and seed."""

    kind: str
    w: float
    q: float
    seed: int


@dataclass(frozen=True, eq=False)
class PushSumRun:
    """Trajectories of one run; error is NaN where a weight hit zero."""

    x: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    error: np.ndarray = field(repr=False)
    a_log: tuple[tuple[int, np.ndarray], ...] | None
    spec: ProtocolSpec


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Pooled moment fit with standard errors and a shape residual.

    residual_z is the largest per-entry z-score of an individual edge or
    edge-pair statistic against its pooled class mean; it measures how
    homogeneous the observed moments are, in standard errors. beta_hat
    is None when the graph offers no within-sender pairs.
    """

    m1: float
    m2: float
    m_beta: float | None
    m_alpha: float
    se1: float
    se2: float
    se_beta: float | None
    se_alpha: float
    u_hat: float
    se_u: float
    r2_hat: float
    se_r2: float
    alpha_hat: float
    se_alpha_hat: float
    beta_hat: float | None
    se_beta_hat: float | None
    residual_z: float
    samples: int
    counts: tuple[int, int, int]

    def to_params(self, q: float) -> CorrelationParams:
        return CorrelationParams(
            q=q,
            r=math.sqrt(max(self.r2_hat, 0.0)),
            alpha=max(self.alpha_hat, 0.0),
            beta=max(self.beta_hat or 0.0, 0.0),
            u=self.u_hat,
        )


def _validate_protocol(spec: ProtocolSpec, mix: MixingMatrix) -> None:
    if spec.kind not in _KINDS:
        raise ValidationError(
            f"unknown protocol {spec.kind!r}; expected one of {_KINDS}"
        )
    if not 0.0 <= spec.q <= 1.0:
        raise ValidationError(f"activation rate q must lie in [0,1], got {spec.q!r}")
    if not spec.w > 0.0:
        raise ValidationError(f"edge mass w must be positive, got {spec.w!r}")
    degs = _degrees(mix)
    if spec.kind == "broadcast" and spec.w * degs.max() > 1.0 + 1e-12:
        raise ValidationError(
            f"broadcast mass w*deg = {spec.w * degs.max()!r} exceeds 1; "
            "a sender would emit more than its full value"
        )
    if spec.kind == "unicast" and spec.w > 1.0 + 1e-12:
        raise ValidationError(f"unicast mass w = {spec.w!r} exceeds 1")


def _degrees(mix: MixingMatrix) -> np.ndarray:
    return (mix.entries > 0.0).sum(axis=0)


def _csr(mix: MixingMatrix) -> tuple[np.ndarray, np.ndarray]:
    adj = mix.entries > 0.0
    nbrs = [np.flatnonzero(adj[i]) for i in range(mix.n)]
    indptr = np.zeros(mix.n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v) for v in nbrs])
    indices = (
        np.concatenate(nbrs).astype(np.int64)
        if nbrs
        else np.zeros(0, dtype=np.int64)
    )
    return indptr, indices


def protocol_params(spec: ProtocolSpec, mix: MixingMatrix) -> CorrelationParams:
    """Closed-form correlation parameters of the protocol.

    Broadcast on mixing level c: sqrt(u) = w/c, r^2 = w^2/(q c),
    beta = w^2/(q c^2), alpha = w^2/c^2 (beta c = r^2 holds with
    equality). Unicast needs a regular graph of degree 1/c: sqrt(u) = w,
    r^2 = w^2/q, beta = 0, alpha = w^2.
    """
    _validate_protocol(spec, mix)
    if spec.q <= 0.0:
        raise ValidationError("moment parameters need a positive activation rate")
    c = mix.c
    w, q = spec.w, spec.q
    if spec.kind == "broadcast":
        return CorrelationParams(
            q=q,
            r=math.sqrt(w * w / (q * c)),
            alpha=w * w / (c * c),
            beta=w * w / (q * c * c),
            u=w * w / (c * c),
        )
    degs = _degrees(mix)
    if degs.min() != degs.max():
        raise ValidationError(
            "unicast moment parameters require a regular graph"
        )
    if abs(c * degs[0] - 1.0) > 1e-12:
        raise ValidationError(
            "unicast moment parameters require the row-stochastic level c = 1/degree"
        )
    return CorrelationParams(
        q=q, r=math.sqrt(w * w / q), alpha=w * w, beta=0.0, u=w * w
    )


def _sample_batch(
    spec: ProtocolSpec, mix: MixingMatrix, rng: np.random.Generator, size: int
) -> np.ndarray:
    n = mix.n
    adj = mix.entries > 0.0
    act = rng.random((size, n)) < spec.q
    out = np.zeros((size, n, n))
    if spec.kind == "broadcast":
        out = spec.w * (adj[None, :, :] & act[:, None, :]).astype(np.float64)
        return out
    degs = _degrees(mix)
    choice = rng.random((size, n))
    nbrs = [np.flatnonzero(adj[i]) for i in range(n)]
    samples_idx = np.arange(size)
    for i in range(n):
        slot = np.minimum((choice[:, i] * degs[i]).astype(np.int64), degs[i] - 1)
        target = np.asarray(nbrs[i])[slot]
        mask = act[:, i]
        out[samples_idx[mask], target[mask], i] = spec.w
    return out


def sample_c(
    spec: ProtocolSpec, mix: MixingMatrix, rng: np.random.Generator
) -> np.ndarray:
    """One draw of the random transmission matrix C (column j->i mass)."""
    _validate_protocol(spec, mix)
    return _sample_batch(spec, mix, rng, 1)[0]


def build_a(c: np.ndarray) -> np.ndarray:
    """A = I - diag(column sums) + C; rejects column mass above 1."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError(f"C must be square, got shape {c.shape}")
    if float(c.min()) < 0.0:
        raise ValidationError("C has negative entries")
    mass = c.sum(axis=0)
    if float(mass.max()) > 1.0 + 1e-12:
        raise ValidationError(
            f"column mass {float(mass.max())!r} exceeds 1; A would leave "
            "the stochastic simplex"
        )
    return np.diag(1.0 - mass) + c


def run_pushsum(
    spec: ProtocolSpec,
    mix: MixingMatrix,
    x0: np.ndarray,
    t_max: int,
    rng: np.random.Generator | None = None,
    a_sample_every: int = 0,
) -> PushSumRun:
    """Simulate t_max rounds of x(t) = A(t) x(t-1), w(t) = A(t) w(t-1).

    The error series is max_i |x_i/w_i - mean(x0)| per step, NaN on steps
    where some weight is nonpositive. rng defaults to a fresh generator
    seeded from the spec. a_sample_every > 0 additionally reconstructs
    and stores every k-th round's A matrix from the same uniforms the
    kernel consumed.
    """
    _validate_protocol(spec, mix)
    n = mix.n
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (n,):
        raise ValidationError(f"x0 has shape {x0.shape}, expected ({n},)")
    if t_max < 1:
        raise ValidationError("t_max must be at least 1")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    act_u = rng.random((t_max, n))
    choice_u = rng.random((t_max, n)) if spec.kind == "unicast" else None
    xs = np.zeros((t_max + 1, n))
    ws = np.zeros((t_max + 1, n))
    xs[0] = x0
    ws[0] = 1.0
    indptr, indices = _csr(mix)
    if spec.kind == "broadcast":
        _kernels.broadcast_steps(indptr, indices, spec.w, spec.q, xs, ws, act_u)
    else:
        _kernels.unicast_steps(
            indptr, indices, spec.w, spec.q, xs, ws, act_u, choice_u
        )
    xbar = float(x0.mean())
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = xs / ws
    err = np.abs(ratios - xbar).max(axis=1)
    err[(ws <= 0.0).any(axis=1)] = np.nan
    a_log = None
    if a_sample_every > 0:
        logged = []
        for t in range(0, t_max, a_sample_every):
            crow = choice_u[t] if choice_u is not None else None
            logged.append((t, _reconstruct_a(spec, mix, act_u[t], crow)))
        a_log = tuple(logged)
    return PushSumRun(x=xs, w=ws, error=err, a_log=a_log, spec=spec)


def _reconstruct_a(
    spec: ProtocolSpec,
    mix: MixingMatrix,
    act_row: np.ndarray,
    choice_row: np.ndarray | None,
) -> np.ndarray:
    n = mix.n
    adj = mix.entries > 0.0
    act = act_row < spec.q
    c = np.zeros((n, n))
    if spec.kind == "broadcast":
        c = spec.w * (adj & act[None, :]).astype(np.float64)
    else:
        degs = _degrees(mix)
        for i in np.flatnonzero(act):
            nbr = np.flatnonzero(adj[i])
            slot = min(int(choice_row[i] * degs[i]), degs[i] - 1)
            c[nbr[slot], i] = spec.w
    return build_a(c)


def _entry_stats(chunks_sum, chunks_sq, count):
    mean = chunks_sum / count
    var = np.maximum(chunks_sq - chunks_sum * chunks_sum / count, 0.0) / max(
        count - 1, 1
    )
    se = np.sqrt(var / count)
    return mean, se


def estimate_moments(
    spec: ProtocolSpec,
    mix: MixingMatrix,
    samples: int,
    rng: np.random.Generator | None = None,
    chunk: int = 8192,
) -> MomentEstimate:
    """Fit the homogeneous moment parameters from i.i.d. draws of C.

    Per directed edge, c/p estimates q sqrt(u) and c^2/p estimates
    q^2 r^2; within-sender edge pairs estimate beta q^2 and cross-sender
    pairs alpha q^2. Entries are pooled per class; the residual reports
    the worst per-entry deviation from its class mean in z units.
    """
    _validate_protocol(spec, mix)
    if spec.q <= 0.0:
        raise ValidationError(
            "q = 0 sends nothing; moments are not identifiable"
        )
    if samples < 10_000:
        raise ValidationError(
            f"moment fitting needs at least 10000 samples, got {samples}"
        )
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = mix.n
    ent = mix.entries
    rows_e, cols_e = np.nonzero(ent > 0.0)
    p_e = ent[rows_e, cols_e]
    wl, wj, wi = [], [], []  # within-sender pairs (l, j both hear i)
    for i in range(n):
        nbr = np.flatnonzero(ent[:, i] > 0.0)
        for a in range(len(nbr)):
            for bidx in range(a + 1, len(nbr)):
                wl.append(nbr[a])
                wj.append(nbr[bidx])
                wi.append(i)
    wl, wj, wi = (np.asarray(v, dtype=np.int64) for v in (wl, wj, wi))
    m_edges = rows_e.size
    al, ai, aj, ak = [], [], [], []  # cross-sender pairs of directed edges
    for e1 in range(m_edges):
        for e2 in range(e1 + 1, m_edges):
            if cols_e[e1] != cols_e[e2]:
                al.append(rows_e[e1])
                ai.append(cols_e[e1])
                aj.append(rows_e[e2])
                ak.append(cols_e[e2])
    al, ai, aj, ak = (np.asarray(v, dtype=np.int64) for v in (al, ai, aj, ak))

    sums = [np.zeros(m_edges), np.zeros(m_edges), np.zeros(wl.size), np.zeros(al.size)]
    sqs = [np.zeros_like(v) for v in sums]
    csum = np.zeros(4)
    csq = np.zeros(4)
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        c = _sample_batch(spec, mix, rng, size)
        x1 = c[:, rows_e, cols_e] / p_e[None, :]
        x2 = c[:, rows_e, cols_e] ** 2 / p_e[None, :]
        xb = c[:, wl, wi] * c[:, wj, wi] / (ent[wl, wi] * ent[wj, wi])[None, :]
        xa = c[:, al, ai] * c[:, aj, ak] / (ent[al, ai] * ent[aj, ak])[None, :]
        for k, x in enumerate((x1, x2, xb, xa)):
            if x.shape[1] == 0:
                continue
            sums[k] += x.sum(axis=0)
            sqs[k] += (x * x).sum(axis=0)
            per_sample = x.mean(axis=1)
            csum[k] += per_sample.sum()
            csq[k] += (per_sample * per_sample).sum()
        done += size

    class_mean, class_se = _entry_stats(csum, csq, samples)
    m1, m2, mb, ma = (float(v) for v in class_mean)
    se1, se2, seb, sea = (float(v) for v in class_se)
    if m1 <= 0.0:
        raise ValidationError(
            "no transmissions observed; moments are not identifiable"
        )
    q = spec.q
    residual = 0.0
    for k, (tot, sq, cm) in enumerate(zip(sums, sqs, class_mean)):
        if tot.size == 0:
            continue
        emean, ese = _entry_stats(tot, sq, samples)
        diff = np.abs(emean - cm)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(
                ese > 0.0, diff / ese, np.where(diff <= 1e-12, 0.0, np.inf)
            )
        residual = max(residual, float(z.max()))

    has_beta = wl.size > 0
    sqrt_u_hat = m1 / q
    return MomentEstimate(
        m1=m1,
        m2=m2,
        m_beta=mb if has_beta else None,
        m_alpha=ma,
        se1=se1,
        se2=se2,
        se_beta=seb if has_beta else None,
        se_alpha=sea,
        u_hat=sqrt_u_hat * sqrt_u_hat,
        se_u=2.0 * sqrt_u_hat * se1 / q,
        r2_hat=m2 / (q * q),
        se_r2=se2 / (q * q),
        alpha_hat=ma / (q * q),
        se_alpha_hat=sea / (q * q),
        beta_hat=mb / (q * q) if has_beta else None,
        se_beta_hat=seb / (q * q) if has_beta else None,
        residual_z=residual,
        samples=samples,
        counts=(m_edges, int(wl.size), int(al.size)),
    )


def phi_star_mc(
    spec: ProtocolSpec,
    mix: MixingMatrix,
    x: np.ndarray,
    samples: int,
    rng: np.random.Generator | None = None,
    chunk: int = 4096,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of E[A X A^T]: (entrywise mean, entrywise SE)."""
    _validate_protocol(spec, mix)
    if samples < 1000:
        raise ValidationError(
            f"operator averaging needs at least 1000 samples, got {samples}"
        )
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    x = np.asarray(x, dtype=np.float64)
    n = mix.n
    total = np.zeros((n, n))
    total_sq = np.zeros((n, n))
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        cs = _sample_batch(spec, mix, rng, size)
        mass = cs.sum(axis=1)
        a = cs
        idx = np.arange(n)
        a[:, idx, idx] += 1.0 - mass
        y = np.einsum("sij,jk,slk->sil", a, x, a, optimize=True)
        total += y.sum(axis=0)
        total_sq += (y * y).sum(axis=0)
        done += size
    mean, se = _entry_stats(total, total_sq, samples)
    return mean, se


def empirical_rate(
    run: PushSumRun, window: float = 0.5, min_points: int = 10
) -> float:
    """Least-squares slope of log error over the trailing window.

    NaN entries (dead weights) are skipped; an all-zero trailing error
    series returns -inf (exact consensus). Fewer than min_points usable
    points is an error.
    """
    if not 0.0 < window <= 1.0:
        raise ValidationError(f"window must lie in (0,1], got {window!r}")
    err = run.error
    start = int(math.floor(len(err) * (1.0 - window)))
    tail = err[start:]
    ts = np.arange(start, len(err), dtype=np.float64)
    finite = np.isfinite(tail)
    if finite.any() and not (tail[finite] > 0.0).any():
        return -math.inf
    keep = finite & (tail > 0.0)
    if int(keep.sum()) < min_points:
        raise ValidationError(
            f"only {int(keep.sum())} usable error points in the window; "
            f"need {min_points}"
        )
    slope = np.polyfit(ts[keep], np.log(tail[keep]), 1)[0]
    return float(slope)
