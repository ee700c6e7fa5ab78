"""Pure NumPy fallback for the compiled kernels.

Same rotation order, same skip rule, same stepping semantics as
``_core.pyx``. Results agree with the compiled backend to floating-point
reassociation level (summation order inside vectorized ops may differ).
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a, max_sweeps: int = 64, tol_factor: float = 1e-14):
    """See ``_core.jacobi_eigh``; identical contract."""
    A = np.array(a, dtype=np.float64, copy=True, order="C")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("jacobi_eigh requires a square matrix")
    V = np.eye(n, dtype=np.float64)
    fro = math.sqrt(float(np.sum(A * A)))
    thresh = tol_factor * fro
    skip = 1e-18 * fro
    idx = np.arange(n)
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(2.0 * float(np.sum(np.triu(A, 1) ** 2)))
        if off <= thresh:
            return np.diagonal(A).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = (aqq - app) / (2.0 * apq)
                sgn = 1.0 if theta >= 0 else -1.0
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = sgn / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                mask = (idx != p) & (idx != q)
                akp = A[mask, p].copy()
                akq = A[mask, q].copy()
                A[mask, p] = c * akp - s * akq
                A[p, mask] = A[mask, p]
                A[mask, q] = s * akp + c * akq
                A[q, mask] = A[mask, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vkp = V[:, p].copy()
                vkq = V[:, q].copy()
                V[:, p] = c * vkp - s * vkq
                V[:, q] = s * vkp + c * vkq
    raise RuntimeError(f"jacobi_eigh did not converge in {max_sweeps} sweeps")


def broadcast_steps(indptr, indices, w: float, q: float, xs, ws, act_u) -> None:
    """See ``_core.broadcast_steps``; identical contract."""
    n = xs.shape[1]
    t_max = act_u.shape[0]
    deg = (indptr[1:] - indptr[:-1]).astype(np.float64)
    adj = np.zeros((n, n), dtype=np.float64)
    for j in range(n):
        adj[j, indices[indptr[j]:indptr[j + 1]]] = 1.0
    for t in range(t_max):
        act = (act_u[t] < q).astype(np.float64)
        keep = 1.0 - w * deg * act
        xs[t + 1] = xs[t] * keep + w * (adj @ (act * xs[t]))
        ws[t + 1] = ws[t] * keep + w * (adj @ (act * ws[t]))


def unicast_steps(indptr, indices, w: float, q: float, xs, ws, act_u, choice_u) -> None:
    """See ``_core.unicast_steps``; identical contract."""
    n = xs.shape[1]
    t_max = act_u.shape[0]
    deg = indptr[1:] - indptr[:-1]
    for t in range(t_max):
        act = act_u[t] < q
        senders = np.nonzero(act)[0]
        slot = (choice_u[t, senders] * deg[senders]).astype(np.int64)
        slot = np.minimum(slot, deg[senders] - 1)
        targets = indices[indptr[senders] + slot]
        acc_x = np.zeros(n, dtype=np.float64)
        acc_w = np.zeros(n, dtype=np.float64)
        np.add.at(acc_x, targets, w * xs[t, senders])
        np.add.at(acc_w, targets, w * ws[t, senders])
        keep = 1.0 - w * act.astype(np.float64)
        xs[t + 1] = xs[t] * keep + acc_x
        ws[t + 1] = ws[t] * keep + acc_w
