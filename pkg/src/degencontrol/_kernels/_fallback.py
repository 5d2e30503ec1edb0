"""Pure-Python twins of the compiled kernels in ``_core.pyx``.

Same algorithms, same signatures.  The eigenvector rotations are applied with
numpy row operations; everything else is scalar Python.  Orders of magnitude
slower than the compiled core at production grid sizes.
"""

import math

import numpy as np

from degencontrol.errors import ConvergenceFailure, SolverBreakdown

EPS = 2.0**-52
TINY_PIVOT = 1e-300


def tridiag_eigh(diag, offdiag, max_iter=60):
    """Eigenpairs of a real symmetric tridiagonal matrix by implicit-shift QL.

    Returns ``(w, zt)`` with ``w`` ascending and ``zt[k]`` the unit-norm
    eigenvector for ``w[k]`` (rows, not columns).
    """
    d_arr = np.array(diag, dtype=np.float64)
    n = d_arr.shape[0]
    if len(offdiag) != max(n - 1, 0):
        raise ValueError("offdiag must have length len(diag) - 1")
    d = d_arr.tolist()
    e = [float(x) for x in offdiag] + [0.0]
    zt = np.eye(n)
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    raise ConvergenceFailure(
                        f"QL iteration did not converge for eigenvalue {l} "
                        f"after {max_iter} sweeps"
                    )
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
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
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    zi = zt[i].copy()
                    zt[i] = c * zi - s * zt[i + 1]
                    zt[i + 1] = s * zi + c * zt[i + 1]
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0

    w = np.array(d)
    order = np.argsort(w, kind="stable")
    return w[order], zt[order]


class _Factor:
    def __init__(self, sub, diag, sup):
        n = len(diag)
        self.n = n
        self.sub = [float(x) for x in sub]
        self.cp = [0.0] * max(n - 1, 0)
        self.inv_den = [0.0] * n
        den = float(diag[0])
        for i in range(n):
            if i > 0:
                den = float(diag[i]) - self.sub[i - 1] * self.cp[i - 1]
            if abs(den) < TINY_PIVOT:
                raise SolverBreakdown(f"pivot {den!r} at row {i}")
            self.inv_den[i] = 1.0 / den
            if i < n - 1:
                self.cp[i] = float(sup[i]) / den

    def solve(self, rhs):
        n, sub, cp, inv_den = self.n, self.sub, self.cp, self.inv_den
        out = [0.0] * n
        out[0] = rhs[0] * inv_den[0]
        for i in range(1, n):
            out[i] = (rhs[i] - sub[i - 1] * out[i - 1]) * inv_den[i]
        for i in range(n - 2, -1, -1):
            out[i] -= cp[i] * out[i + 1]
        return out


def thomas_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system without pivoting."""
    n = len(diag)
    if len(sub) != n - 1 or len(sup) != n - 1 or len(rhs) != n:
        raise ValueError("inconsistent tridiagonal system shapes")
    return np.array(_Factor(sub, diag, sup).solve([float(x) for x in rhs]))


def implicit_march(sub, diag, sup, v0, n_steps, record_steps,
                   expl_sub=None, expl_diag=None, expl_sup=None):
    """Repeatedly solve ``M v_{n+1} = B v_n`` for a fixed tridiagonal ``M``.

    ``B`` is the identity unless the three ``expl_*`` bands are given.
    Returns one row per entry of the increasing ``record_steps`` (step 0 is
    ``v0`` itself).
    """
    rec = np.asarray(record_steps, dtype=np.intp)
    if rec.size and (np.any(np.diff(rec) <= 0) or rec[0] < 0 or rec[-1] > n_steps):
        raise ValueError("record_steps must be increasing and within [0, n_steps]")
    fac = _Factor(sub, diag, sup)
    cur = np.array(v0, dtype=np.float64)
    out = np.empty((rec.size, len(diag)))
    snap = 0
    if snap < rec.size and rec[snap] == 0:
        out[snap] = cur
        snap += 1
    for step in range(1, n_steps + 1):
        if snap >= rec.size:
            break
        if expl_diag is not None:
            rhs = expl_diag * cur
            rhs[1:] += expl_sub * cur[:-1]
            rhs[:-1] += expl_sup * cur[1:]
        else:
            rhs = cur
        cur = np.array(fac.solve(rhs.tolist()))
        if rec[snap] == step:
            out[snap] = cur
            snap += 1
    return out
