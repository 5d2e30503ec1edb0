"""Full eigendecomposition of the assembled operator.

Conventions follow the control construction: the operator ``A`` has
eigenvalues ``-lambda_k`` with ``lambda_1 <= lambda_2 <= ...`` and the modes
``omega_k`` are orthonormal in the discrete L2 inner product.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .coefficient import DiffusionCoefficient
from .discretization import (AssembledOperator, Grid, StateField, inner_product,
                             weighted_seminorm)
from .errors import GapTooSmall, GridMismatch

GAP_WARN = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    grid: Grid
    lambdas: np.ndarray
    modes: np.ndarray  # modes[k - 1] holds omega_k on the cell centers
    gap: float

    def mode(self, k: int) -> StateField:
        """The k-th mode, 1-based (``mode(1)`` is the ground mode)."""
        return StateField(self.grid, self.modes[k - 1])

    @property
    def n(self) -> int:
        return len(self.lambdas)


def _normalize_signs(modes: np.ndarray, h: float) -> None:
    # <omega, 1> >= 0; odd-looking modes fall back to first significant entry > 0
    means = h * modes.sum(axis=1)
    scale = np.sqrt(2.0)
    for k, row in enumerate(modes):
        if abs(means[k]) > 1e-10 * scale:
            if means[k] < 0:
                row *= -1.0
            continue
        big = np.flatnonzero(np.abs(row) > 1e-8 * np.max(np.abs(row)))
        if big.size and row[big[0]] < 0:
            row *= -1.0


def eigendecompose(op: AssembledOperator) -> SpectralDecomposition:
    h = op.grid.h
    lambdas, zt = _kernels.tridiag_eigh(np.ascontiguousarray(-op.diag),
                                        np.ascontiguousarray(-op.offdiag))
    modes = zt / np.sqrt(h)
    _normalize_signs(modes, h)
    lambdas.flags.writeable = False
    modes.flags.writeable = False
    gap = float(lambdas[1] - lambdas[0]) if len(lambdas) > 1 else float("inf")
    if gap < GAP_WARN:
        warnings.warn(f"spectral gap {gap:.3e} below {GAP_WARN:g}", GapTooSmall,
                      stacklevel=2)
    return SpectralDecomposition(op.grid, lambdas, modes, gap)


def project(decomp: SpectralDecomposition, v: StateField, k_max: int | None = None) -> np.ndarray:
    """Expansion coefficients ``c_k = <v, omega_k>`` for k = 1..k_max."""
    if v.grid.n_cells != decomp.grid.n_cells:
        raise GridMismatch("field and decomposition live on different grids")
    k_max = decomp.n if k_max is None else int(k_max)
    if not 1 <= k_max <= decomp.n:
        raise ValueError(f"k_max must lie in [1, {decomp.n}], got {k_max}")
    return decomp.grid.h * (decomp.modes[:k_max] @ v.values)


def parseval_defect(decomp: SpectralDecomposition, v: StateField) -> float:
    c = project(decomp, v)
    return abs(inner_product(v, v) - float(np.dot(c, c)))


def eigen_residuals(op: AssembledOperator, decomp: SpectralDecomposition,
                    k_max: int | None = None) -> np.ndarray:
    """Discrete L2 norms of ``(-op) omega_k - lambda_k omega_k``."""
    k_max = decomp.n if k_max is None else k_max
    modes = decomp.modes[:k_max]
    r = -op.apply(modes) - decomp.lambdas[:k_max, None] * modes
    return np.sqrt(decomp.grid.h * np.einsum("ij,ij->i", r, r))


def rayleigh_quotient(op: AssembledOperator, u: StateField) -> float:
    return -inner_product(StateField(u.grid, op.apply(u)), u) / inner_product(u, u)


def rayleigh_check(coeff: DiffusionCoefficient, alpha_star: StateField,
                   u: StateField) -> bool:
    """Check ``int alpha_* u^2 <= int a u_x^2`` up to a 1e-9 slack."""
    lhs = inner_product(StateField(u.grid, alpha_star.values * u.values), u)
    rhs = weighted_seminorm(coeff, u) ** 2
    return lhs <= rhs + 1e-9 * (1.0 + inner_product(u, u))
