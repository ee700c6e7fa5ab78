# cython: language_level=3
"""Compiled hot loops: cyclic Jacobi eigensolver and push-sum steppers.

Semantics must stay in lockstep with the pure NumPy fallback in
``_pure.py``; both are exercised by the same test suite.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport fabs, sqrt


@cython.boundscheck(False)
@cython.wraparound(False)
def jacobi_eigh(double[:, ::1] a, int max_sweeps=64, double tol_factor=1e-14):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    a : (n, n) C-contiguous float64 memoryview
        Symmetric input; not modified.
    max_sweeps : int
        Hard cap on the number of cyclic sweeps.
    tol_factor : float
        Converged when the off-diagonal Frobenius mass drops below
        ``tol_factor`` times the Frobenius norm of the input.

    Returns
    -------
    (eigenvalues, eigenvectors, sweeps)
        Unsorted eigenvalues (diagonal after convergence), the accumulated
        orthogonal matrix with eigenvectors in columns, and the number of
        completed sweeps.
    """
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("jacobi_eigh requires a square matrix")
    A_arr = np.array(a, dtype=np.float64, copy=True, order="C")
    V_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] V = V_arr
    cdef Py_ssize_t i, j, k, p, q
    cdef double fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += A[i, j] * A[i, j]
    fro = sqrt(fro)
    cdef double thresh = tol_factor * fro
    # rotations this small cannot move the off-diagonal mass past thresh
    cdef double skip = 1e-18 * fro
    cdef double off, apq, app, aqq, theta, t, c, s, sgn, akp, akq, vkp, vkq
    cdef int sweep
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        off = sqrt(off)
        if off <= thresh:
            return np.diagonal(A_arr).copy(), V_arr, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if fabs(apq) <= skip:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = (aqq - app) / (2.0 * apq)
                sgn = 1.0 if theta >= 0 else -1.0
                if fabs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = sgn / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = A[k, p]
                        akq = A[k, q]
                        A[k, p] = c * akp - s * akq
                        A[p, k] = A[k, p]
                        A[k, q] = s * akp + c * akq
                        A[q, k] = A[k, q]
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    raise RuntimeError(
        "jacobi_eigh did not converge in %d sweeps" % max_sweeps
    )


@cython.boundscheck(False)
@cython.wraparound(False)
def broadcast_steps(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                    double w, double q,
                    double[:, ::1] xs, double[:, ::1] ws,
                    double[:, ::1] act_u):
    """Advance push-sum under the broadcast protocol, in place.

    Row ``t`` of ``xs``/``ws`` is the state before step ``t``; the kernel
    fills rows ``1..t_max``. Node ``i`` activates at step ``t`` iff
    ``act_u[t, i] < q`` and then sends mass ``w`` along every incident edge.
    """
    cdef Py_ssize_t n = xs.shape[1]
    cdef Py_ssize_t t_max = act_u.shape[0]
    cdef Py_ssize_t t, i, j, kk, deg_j
    cdef double aj, sx, sw
    for t in range(t_max):
        for j in range(n):
            deg_j = indptr[j + 1] - indptr[j]
            aj = 1.0 if act_u[t, j] < q else 0.0
            sx = 0.0
            sw = 0.0
            for kk in range(indptr[j], indptr[j + 1]):
                i = indices[kk]
                if act_u[t, i] < q:
                    sx += xs[t, i]
                    sw += ws[t, i]
            xs[t + 1, j] = xs[t, j] * (1.0 - w * deg_j * aj) + w * sx
            ws[t + 1, j] = ws[t, j] * (1.0 - w * deg_j * aj) + w * sw


@cython.boundscheck(False)
@cython.wraparound(False)
def unicast_steps(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                  double w, double q,
                  double[:, ::1] xs, double[:, ::1] ws,
                  double[:, ::1] act_u, double[:, ::1] choice_u):
    """Advance push-sum under the unicast protocol, in place.

    An active node sends mass ``w`` to one uniformly chosen neighbour,
    selected by ``choice_u[t, i]`` in [0, 1).
    """
    cdef Py_ssize_t n = xs.shape[1]
    cdef Py_ssize_t t_max = act_u.shape[0]
    acc_x_arr = np.zeros(n, dtype=np.float64)
    acc_w_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc_x = acc_x_arr
    cdef double[::1] acc_w = acc_w_arr
    cdef Py_ssize_t t, i, j, k, idx, deg_i
    cdef double aj
    for t in range(t_max):
        for j in range(n):
            acc_x[j] = 0.0
            acc_w[j] = 0.0
        for i in range(n):
            if act_u[t, i] < q:
                deg_i = indptr[i + 1] - indptr[i]
                idx = <Py_ssize_t>(choice_u[t, i] * deg_i)
                if idx >= deg_i:
                    idx = deg_i - 1
                k = indices[indptr[i] + idx]
                acc_x[k] += w * xs[t, i]
                acc_w[k] += w * ws[t, i]
        for j in range(n):
            aj = 1.0 if act_u[t, j] < q else 0.0
            xs[t + 1, j] = xs[t, j] * (1.0 - w * aj) + acc_x[j]
            ws[t + 1, j] = ws[t, j] * (1.0 - w * aj) + acc_w[j]
