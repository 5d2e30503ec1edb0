"""Cell-centered finite-volume discretization of u -> (a u_x)_x + alpha u.

The grid has ``n`` uniform cells on (-1, 1).  Fluxes ``a(x_f) (u_{i+1} - u_i)/h``
live on interior faces; the two boundary faces carry no flux, which encodes the
weighted Neumann condition ``a u_x = 0`` at x = +-1 without ever dividing by
``a(+-1)``.  The resulting matrix is symmetric tridiagonal in the plain
discrete L2 inner product ``<u, w> = h * sum(u_i w_i)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .coefficient import DiffusionCoefficient
from .errors import EmptyTrace, GridMismatch, TooFewCells

MIN_CELLS = 4


@dataclass(frozen=True)
class Grid:
    n_cells: int

    def __post_init__(self):
        if self.n_cells < MIN_CELLS:
            raise TooFewCells(f"need at least {MIN_CELLS} cells, got {self.n_cells}")

    @property
    def h(self) -> float:
        return 2.0 / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        c = -1.0 + (np.arange(self.n_cells) + 0.5) * self.h
        c.flags.writeable = False
        return c

    @cached_property
    def faces(self) -> np.ndarray:
        f = -1.0 + np.arange(self.n_cells + 1) * self.h
        f[0], f[-1] = -1.0, 1.0
        f.flags.writeable = False
        return f


def build_grid(n_cells: int) -> Grid:
    return Grid(int(n_cells))


@dataclass(frozen=True, eq=False)
class StateField:
    """Values of a scalar field at the cell centers of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_cells,):
            raise GridMismatch(
                f"field has shape {v.shape}, grid has {self.grid.n_cells} cells")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid: Grid, func) -> "StateField":
        return cls(grid, np.broadcast_to(func(grid.centers), grid.centers.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "StateField":
        return cls(grid, np.full(grid.n_cells, float(value)))

    def with_values(self, values) -> "StateField":
        return StateField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, StateField):
            _same_grid(self, other)
            other = other.values
        return StateField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, StateField):
            _same_grid(self, other)
            other = other.values
        return StateField(self.grid, self.values - other)

    def __mul__(self, scalar):
        return StateField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return StateField(self.grid, -self.values)


def _same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid.n_cells != grid.n_cells:
            raise GridMismatch(
                f"fields live on grids with {grid.n_cells} and {f.grid.n_cells} cells")
    return grid


def inner_product(u: StateField, w: StateField) -> float:
    """Midpoint-rule L2(-1, 1) inner product."""
    grid = _same_grid(u, w)
    return grid.h * float(np.dot(u.values, w.values))


def norm(u: StateField) -> float:
    return float(np.sqrt(inner_product(u, u)))


def weighted_seminorm(coeff: DiffusionCoefficient, u: StateField) -> float:
    """Discrete ``|u|_{1,a} = ||sqrt(a) u_x||`` summed over interior faces."""
    grid = u.grid
    a_f = coeff.a(grid.faces[1:-1])
    du = np.diff(u.values) / grid.h
    return float(np.sqrt(grid.h * np.dot(a_f, du * du)))


def b_norm(trace, coeff: DiffusionCoefficient) -> float:
    """Squared energy norm ``sup_t ||v(t)||^2 + 2 int_0^T |v(t)|_{1,a}^2 dt``.

    The time integral uses the trapezoid rule over the stored snapshots.
    """
    if trace is None or len(trace.times) == 0:
        raise EmptyTrace("b_norm needs at least one snapshot")
    grid = trace.grid
    h = grid.h
    states = np.asarray(trace.states)
    sup_term = float(np.max(h * np.einsum("ij,ij->i", states, states)))
    if len(trace.times) == 1:
        return sup_term
    a_f = coeff.a(grid.faces[1:-1])
    du = np.diff(states, axis=1) / h
    semi_sq = h * (du * du) @ a_f
    t = np.asarray(trace.times)
    integral = float(np.sum(0.5 * (semi_sq[1:] + semi_sq[:-1]) * np.diff(t)))
    return sup_term + 2.0 * integral


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    """Symmetric tridiagonal matrix of ``(a u_x)_x + alpha u``.

    ``offdiag[i]`` couples cells i and i+1 and equals ``a(x_{i+1/2}) / h**2``.
    """

    grid: Grid
    diag: np.ndarray
    offdiag: np.ndarray
    alpha: StateField
    coeff: DiffusionCoefficient | None = field(default=None, repr=False)

    def apply(self, u) -> np.ndarray:
        v = u.values if isinstance(u, StateField) else np.asarray(u, dtype=np.float64)
        if v.shape[-1] != self.grid.n_cells:
            raise GridMismatch("vector length does not match operator size")
        out = self.diag * v
        out[..., :-1] += self.offdiag * v[..., 1:]
        out[..., 1:] += self.offdiag * v[..., :-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diag) + np.diag(self.offdiag, 1)
                + np.diag(self.offdiag, -1))

    def shifted(self, beta: float) -> "AssembledOperator":
        """Operator of ``alpha + beta``; same off-diagonal, shifted diagonal."""
        return AssembledOperator(self.grid, self.diag + beta, self.offdiag,
                                 self.alpha + beta, self.coeff)


def flux_divergence(coeff: DiffusionCoefficient, grid: Grid, u) -> np.ndarray:
    """Conservative stencil for ``(a u_x)_x`` with zero boundary flux."""
    v = u.values if isinstance(u, StateField) else np.asarray(u, dtype=np.float64)
    flux = coeff.a(grid.faces[1:-1]) * np.diff(v) / grid.h
    out = np.zeros_like(v)
    out[:-1] += flux
    out[1:] -= flux
    return out / grid.h


def assemble(coeff: DiffusionCoefficient, alpha: StateField | None,
             grid: Grid) -> AssembledOperator:
    if alpha is None:
        alpha = StateField.constant(grid, 0.0)
    if alpha.grid.n_cells != grid.n_cells:
        raise GridMismatch(
            f"alpha sampled on {alpha.grid.n_cells} cells, grid has {grid.n_cells}")
    k = coeff.a(grid.faces[1:-1]) / grid.h**2
    diag = np.zeros(grid.n_cells)
    diag[:-1] -= k
    diag[1:] -= k
    diag += alpha.values
    k.flags.writeable = False
    diag.flags.writeable = False
    return AssembledOperator(grid, diag, k, alpha, coeff)


# --------------------------------------------------------------------------
# CSV interchange

def _fmt(x: float) -> str:
    return repr(float(x))


def write_field_csv(path, field_: StateField, header: tuple[str, str] = ("x", "value")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, v in zip(field_.grid.centers, field_.values):
            w.writerow((_fmt(x), _fmt(v)))


def read_field_csv(path, grid: Grid | None = None) -> StateField:
    """Read a two-column (x, value) CSV.

    Without ``grid`` the file must hold exactly the cell centers of a uniform
    grid.  With ``grid`` the samples are linearly interpolated onto it unless
    they already coincide with its centers.
    """
    xs, vs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: expected two numbers, got {row!r}")
    xs, vs = np.array(xs), np.array(vs)
    if grid is None:
        grid = Grid(len(xs))
        if not np.allclose(xs, grid.centers, rtol=0, atol=1e-12):
            raise GridMismatch(f"{path}: x column is not a uniform cell-centered grid")
        return StateField(grid, vs)
    if len(xs) == grid.n_cells and np.allclose(xs, grid.centers, rtol=0, atol=1e-12):
        return StateField(grid, vs)
    if len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError(f"{path}: x column must be strictly increasing")
    return StateField(grid, np.interp(grid.centers, xs, vs))


def write_operator_csv(path, op: AssembledOperator):
    """Debug dump of the nonzero entries as (row, col, entry)."""
    n = op.grid.n_cells
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "col", "entry"))
        for i in range(n):
            if i > 0:
                w.writerow((i, i - 1, _fmt(op.offdiag[i - 1])))
            w.writerow((i, i, _fmt(op.diag[i])))
            if i < n - 1:
                w.writerow((i, i + 1, _fmt(op.offdiag[i])))
