"""Time evolution under a static control and the checks run on trajectories.

Two independent integrators are provided:

* :func:`evolve_spectral` sums the eigen-expansion
  ``v(t) = sum_k exp((beta - lambda_k) t) <v0, omega_k> omega_k``;
* :func:`evolve_implicit` marches backward Euler (or Crank-Nicolson) with a
  tridiagonal solve per step.

Backward Euler with ``dt * max(alpha + beta, 0) < 1`` has an M-matrix step
operator, so its inverse is entrywise nonnegative and nonnegative data stay
nonnegative.  Crank-Nicolson has no such guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .discretization import AssembledOperator, Grid, StateField, norm
from .errors import GridMismatch, StepTooLarge
from .spectral import SpectralDecomposition, project

DEFAULT_SNAPSHOTS = 64
METHODS = ("backward_euler", "crank_nicolson")


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    grid: Grid
    times: np.ndarray
    states: np.ndarray  # one row per time
    l2_norms: np.ndarray
    min_values: np.ndarray
    negative_part_norms: np.ndarray
    method: str = ""
    dt: float | None = None
    tail_bounds: np.ndarray | None = None

    @classmethod
    def from_states(cls, grid: Grid, times, states, **extra) -> "EvolutionTrace":
        times = np.asarray(times, dtype=np.float64)
        states = np.asarray(states, dtype=np.float64)
        h = grid.h
        l2 = np.sqrt(h * np.einsum("ij,ij->i", states, states))
        neg = np.maximum(-states, 0.0)
        neg_l2 = np.sqrt(h * np.einsum("ij,ij->i", neg, neg))
        for arr in (times, states, l2, neg_l2):
            arr.flags.writeable = False
        return cls(grid, times, states, l2, states.min(axis=1), neg_l2, **extra)

    def state(self, i: int) -> StateField:
        return StateField(self.grid, self.states[i])

    @property
    def final(self) -> StateField:
        return self.state(-1)

    def __len__(self):
        return len(self.times)


def _snapshot_times(T: float, n_snapshots: int) -> np.ndarray:
    if T < 0:
        raise ValueError(f"horizon must be nonnegative, got {T!r}")
    if T == 0:
        return np.zeros(1)
    if n_snapshots < 2:
        raise ValueError("need at least two snapshots")
    return np.linspace(0.0, T, n_snapshots)


def evolve_spectral(decomp: SpectralDecomposition, beta: float, v0: StateField,
                    T: float, k_max: int | None = None,
                    n_snapshots: int = DEFAULT_SNAPSHOTS) -> EvolutionTrace:
    if v0.grid.n_cells != decomp.grid.n_cells:
        raise GridMismatch("initial state and decomposition live on different grids")
    k_max = decomp.n if k_max is None else int(k_max)
    times = _snapshot_times(T, n_snapshots)
    c = project(decomp, v0, k_max)
    rates = beta - decomp.lambdas[:k_max]
    with np.errstate(under="ignore"):
        amp = np.exp(np.outer(times, rates)) * c
    states = amp @ decomp.modes[:k_max]
    if k_max == decomp.n:
        states[0] = v0.values
        tail = np.zeros_like(times)
    else:
        tail = np.exp((beta - decomp.lambdas[k_max]) * times) * norm(v0)
    return EvolutionTrace.from_states(v0.grid, times, states, method="spectral",
                                      tail_bounds=tail)


def max_positive_rate(op: AssembledOperator, beta: float) -> float:
    return max(0.0, float(np.max(op.alpha.values)) + beta)


def evolve_implicit(op: AssembledOperator, beta: float, v0: StateField, T: float,
                    dt: float, *, method: str = "backward_euler",
                    certify_positivity: bool | None = None,
                    n_snapshots: int = DEFAULT_SNAPSHOTS) -> EvolutionTrace:
    """March ``v' = (A + beta) v`` to time ``T``.

    Takes ``ceil(T / dt)`` equal steps; snapshots are recorded at the steps
    nearest to ``n_snapshots`` uniformly spaced times, and ``trace.times``
    holds the exact step times.  ``certify_positivity`` (default: on for
    backward Euler) enforces the M-matrix step bound and raises
    :class:`StepTooLarge` when it fails.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if v0.grid.n_cells != op.grid.n_cells:
        raise GridMismatch("initial state and operator live on different grids")
    if certify_positivity is None:
        certify_positivity = method == "backward_euler"
    if certify_positivity:
        if method != "backward_euler":
            raise ValueError("only backward Euler carries a positivity certificate")
        rate = max_positive_rate(op, beta)
        if dt * rate >= 1.0:
            raise StepTooLarge(
                f"dt = {dt:g} violates the M-matrix bound dt < {1.0 / rate:.6g}")
    if T < 0:
        raise ValueError(f"horizon must be nonnegative, got {T!r}")
    if T == 0:
        return EvolutionTrace.from_states(op.grid, np.zeros(1), v0.values[None, :],
                                          method=method, dt=0.0)
    n_steps = max(1, math.ceil(T / dt - 1e-9))
    step = T / n_steps
    record = np.unique(np.rint(np.linspace(0, n_steps, max(n_snapshots, 2))).astype(np.intp))
    theta = 1.0 if method == "backward_euler" else 0.5
    m_diag = np.ascontiguousarray(1.0 - theta * step * (op.diag + beta))
    m_off = np.ascontiguousarray(-theta * step * op.offdiag)
    kwargs = {}
    if theta < 1.0:
        e = (1.0 - theta) * step
        kwargs = dict(expl_sub=e * op.offdiag, expl_diag=1.0 + e * (op.diag + beta),
                      expl_sup=e * op.offdiag)
    states = _kernels.implicit_march(m_off, m_diag, m_off,
                                     np.ascontiguousarray(v0.values), n_steps,
                                     record, **kwargs)
    times = record * step
    times[-1] = T
    return EvolutionTrace.from_states(op.grid, times, states, method=method, dt=step)


def negative_part(v: StateField) -> StateField:
    return StateField(v.grid, np.maximum(0.0, -v.values))


def positive_part(v: StateField) -> StateField:
    return StateField(v.grid, np.maximum(v.values, 0.0))


@dataclass(frozen=True)
class NonnegativityReport:
    min_value: float
    max_negative_part_norm: float
    tolerance: float
    passed: bool


def check_nonnegativity(trace: EvolutionTrace) -> NonnegativityReport:
    sup_norm = float(np.max(trace.l2_norms)) if len(trace) else 0.0
    tol = 1e-10 * max(1.0, sup_norm)
    lo = float(np.min(trace.min_values))
    return NonnegativityReport(lo, float(np.max(trace.negative_part_norms)), tol,
                               lo >= -tol)


def gronwall_envelope(trace: EvolutionTrace, alpha_sup: float) -> bool:
    """``||v(t)||^2 <= exp(2 alpha_sup t) ||v0||^2`` at every snapshot."""
    if alpha_sup < 0:
        raise ValueError("alpha_sup is a sup-norm and cannot be negative")
    bound = np.exp(2.0 * alpha_sup * trace.times) * trace.l2_norms[0] ** 2
    return bool(np.all(trace.l2_norms**2 <= bound * (1.0 + 1e-8)))


def steering_error(trace: EvolutionTrace, target) -> float:
    vd = target.field if hasattr(target, "field") else target
    return norm(trace.final - vd)


def remainder_norms(decomp: SpectralDecomposition, beta: float, v0: StateField,
                    times) -> np.ndarray:
    """Norms of ``r(t) = sum_{k >= 2} exp((beta - lambda_k) t) c_k omega_k``."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    c = project(decomp, v0)[1:]
    with np.errstate(under="ignore"):
        amp = np.exp(np.outer(times, beta - decomp.lambdas[1:])) * c
    r = amp @ decomp.modes[1:]
    return np.sqrt(decomp.grid.h * np.einsum("ij,ij->i", r, r))


def remainder_decay(decomp: SpectralDecomposition, beta: float, v0: StateField,
                    times) -> bool:
    """``||r(t)|| <= exp((beta - lambda_2) t) ||v0||`` at every sampled t."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    bound = np.exp((beta - decomp.lambdas[1]) * times) * norm(v0)
    return bool(np.all(remainder_norms(decomp, beta, v0, times) <= bound * (1.0 + 1e-9)))
