# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tridiagonal kernels.

Mirrors :mod:`degencontrol._kernels._fallback` function for function; the two
are checked against each other in the test suite.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, hypot

from degencontrol.errors import ConvergenceFailure, SolverBreakdown

cnp.import_array()

cdef double EPS = 2.0 ** -52
cdef double TINY_PIVOT = 1e-300


def tridiag_eigh(const double[::1] diag, const double[::1] offdiag, int max_iter=60):
    """Eigenpairs of a real symmetric tridiagonal matrix by implicit-shift QL.

    Returns ``(w, zt)`` with ``w`` ascending and ``zt[k]`` the unit-norm
    eigenvector for ``w[k]`` (rows, not columns).
    """
    cdef Py_ssize_t n = diag.shape[0]
    if offdiag.shape[0] != max(n - 1, 0):
        raise ValueError("offdiag must have length len(diag) - 1")
    d_arr = np.array(diag, dtype=np.float64)
    e_arr = np.zeros(n, dtype=np.float64)
    e_arr[: n - 1] = offdiag
    zt_arr = np.eye(n, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef double[::1] e = e_arr
    cdef double[:, ::1] zt = zt_arr
    cdef double f = 0.0, tst1 = 0.0
    cdef double g, p, r, h, c, c2, c3, s, s2, el1, dl1, zi, zi1
    cdef Py_ssize_t l, m, i, k
    cdef int it
    cdef double* row_i
    cdef double* row_i1

    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= EPS * tst1:
                break
            m += 1
        if m == n:
            m = n - 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    raise ConvergenceFailure(
                        f"QL iteration did not converge for eigenvalue {l} "
                        f"after {max_iter} sweeps")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h

                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                i = m - 1
                while i >= l:
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    row_i = &zt[i, 0]
                    row_i1 = &zt[i + 1, 0]
                    for k in range(n):
                        zi = row_i[k]
                        zi1 = row_i1[k]
                        row_i1[k] = s * zi + c * zi1
                        row_i[k] = c * zi - s * zi1
                    i -= 1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if fabs(e[l]) <= EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0

    order = np.argsort(d_arr, kind="stable")
    return d_arr[order], zt_arr[order]


cdef class _Factor:
    cdef Py_ssize_t n
    cdef double[::1] sub
    cdef double[::1] cp
    cdef double[::1] inv_den

    def __init__(self, const double[::1] sub, const double[::1] diag, const double[::1] sup):
        cdef Py_ssize_t n = diag.shape[0]
        cdef Py_ssize_t i
        cdef double den
        self.n = n
        self.sub = np.array(sub, dtype=np.float64)
        self.cp = np.zeros(max(n - 1, 0), dtype=np.float64)
        self.inv_den = np.zeros(n, dtype=np.float64)
        den = diag[0]
        for i in range(n):
            if i > 0:
                den = diag[i] - sub[i - 1] * self.cp[i - 1]
            if fabs(den) < TINY_PIVOT:
                raise SolverBreakdown(f"pivot {den!r} at row {i}")
            self.inv_den[i] = 1.0 / den
            if i < n - 1:
                self.cp[i] = sup[i] / den

    cdef void solve_into(self, double* rhs, double* out) noexcept nogil:
        cdef Py_ssize_t i, n = self.n
        out[0] = rhs[0] * self.inv_den[0]
        for i in range(1, n):
            out[i] = (rhs[i] - self.sub[i - 1] * out[i - 1]) * self.inv_den[i]
        i = n - 2
        while i >= 0:
            out[i] -= self.cp[i] * out[i + 1]
            i -= 1


def thomas_solve(const double[::1] sub, const double[::1] diag, const double[::1] sup, const double[::1] rhs):
    """Solve a tridiagonal system without pivoting."""
    cdef Py_ssize_t n = diag.shape[0]
    if sub.shape[0] != n - 1 or sup.shape[0] != n - 1 or rhs.shape[0] != n:
        raise ValueError("inconsistent tridiagonal system shapes")
    fac = _Factor(sub, diag, sup)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] r = np.array(rhs, dtype=np.float64)
    (<_Factor>fac).solve_into(&r[0], &o[0])
    return out


def implicit_march(const double[::1] sub, const double[::1] diag, const double[::1] sup,
                   const double[::1] v0, Py_ssize_t n_steps, record_steps,
                   expl_sub=None, expl_diag=None, expl_sup=None):
    """Repeatedly solve ``M v_{n+1} = B v_n`` for a fixed tridiagonal ``M``.

    ``B`` is the identity unless the three ``expl_*`` bands are given.
    Returns one row per entry of the increasing ``record_steps`` (step 0 is
    ``v0`` itself).
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t step, i, snap = 0
    rec_arr = np.ascontiguousarray(record_steps, dtype=np.intp)
    cdef Py_ssize_t[::1] rec = rec_arr
    cdef Py_ssize_t n_rec = rec.shape[0]
    if n_rec and (np.any(np.diff(rec_arr) <= 0) or rec_arr[0] < 0 or rec_arr[-1] > n_steps):
        raise ValueError("record_steps must be increasing and within [0, n_steps]")
    fac = _Factor(sub, diag, sup)
    out_arr = np.empty((n_rec, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cur_arr = np.array(v0, dtype=np.float64)
    rhs_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double[::1] rhs = rhs_arr
    cdef bint explicit = expl_diag is not None
    cdef const double[::1] bs, bd, bu
    if explicit:
        bs = np.ascontiguousarray(expl_sub, dtype=np.float64)
        bd = np.ascontiguousarray(expl_diag, dtype=np.float64)
        bu = np.ascontiguousarray(expl_sup, dtype=np.float64)
    if snap < n_rec and rec[snap] == 0:
        out[snap, :] = cur
        snap += 1
    for step in range(1, n_steps + 1):
        if snap >= n_rec:
            break
        if explicit:
            for i in range(n):
                rhs[i] = bd[i] * cur[i]
                if i > 0:
                    rhs[i] += bs[i - 1] * cur[i - 1]
                if i < n - 1:
                    rhs[i] += bu[i] * cur[i + 1]
        else:
            rhs[:] = cur
        (<_Factor>fac).solve_into(&rhs[0], &cur[0])
        if rec[snap] == step:
            out[snap, :] = cur
            snap += 1
    return out_arr
