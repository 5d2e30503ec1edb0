"""Degenerate diffusion coefficients a(x) on [-1, 1].

Four families are supported:

``legendre``
    a(x) = 1 - x**2, the sine-of-latitude diffusion of the one-dimensional
    energy balance climate model.
``power:<gamma>``
    a(x) = (1 - x**2)**gamma.
``constant:<c>``
    a(x) = c, the non-degenerate reference case.
``table:<path>``
    piecewise-linear interpolation of (x, a) samples from a two-column CSV.

:func:`classify_degeneracy` decides whether ``1/a`` is integrable (it is not
for a strongly degenerate coefficient) and whether the antiderivative
``A(x) = int_0^x ds / a(s)`` is integrable on (-1, 1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import hyp2f1

from .errors import BadTable, InconclusiveIntegrability, NonPositiveInterior

KINDS = ("legendre", "power", "constant", "table")

# interior sample used to certify positivity of a(x)
_N_CHECK = 4001
_TABLE_ENDPOINT_TOL = 1e-12
_FD_STEP = 1e-6


@dataclass(frozen=True)
class DiffusionCoefficient:
    """An immutable diffusion coefficient; evaluate with :meth:`a`."""

    kind: str
    gamma: float = 1.0
    c: float = 1.0
    table_x: np.ndarray | None = field(default=None, repr=False, compare=False)
    table_a: np.ndarray | None = field(default=None, repr=False, compare=False)
    source: str | None = None

    def a(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "legendre":
            return 1.0 - x * x
        if self.kind == "power":
            return np.maximum(1.0 - x * x, 0.0) ** self.gamma
        if self.kind == "constant":
            return np.full_like(x, self.c)
        return np.interp(x, self.table_x, self.table_a)

    def a_prime(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "legendre":
            return -2.0 * x
        if self.kind == "power":
            with np.errstate(divide="ignore", invalid="ignore"):
                return -2.0 * self.gamma * x * (1.0 - x * x) ** (self.gamma - 1.0)
        if self.kind == "constant":
            return np.zeros_like(x)
        lo = np.clip(x - _FD_STEP, -1.0, 1.0)
        hi = np.clip(x + _FD_STEP, -1.0, 1.0)
        return (self.a(hi) - self.a(lo)) / (hi - lo)

    @property
    def degenerate(self) -> bool:
        """True when a vanishes at both endpoints."""
        if self.kind == "constant":
            return False
        if self.kind == "table":
            ends = self.a(np.array([-1.0, 1.0]))
            return bool(np.all(np.abs(ends) <= _TABLE_ENDPOINT_TOL))
        return True

    @property
    def descriptor(self) -> str:
        if self.kind == "legendre":
            return "legendre"
        if self.kind == "power":
            return f"power:{self.gamma!r}"
        if self.kind == "constant":
            return f"constant:{self.c!r}"
        return f"table:{self.source}"


@dataclass(frozen=True)
class DegeneracyReport:
    strongly_degenerate: bool
    A_integrable: bool
    A_eval: Callable = field(repr=False, compare=False)
    method: str = "closed-form"
    int_abs_A: float | None = None


def make_coefficient(kind: str, value: float | None = None, *, samples=None,
                     source: str | None = None) -> DiffusionCoefficient:
    """Build and validate a coefficient.

    ``value`` is gamma for ``power`` and c for ``constant``; ``samples`` is a
    sequence of (x, a) pairs for ``table``.
    """
    kind = kind.lower()
    if kind == "legendre":
        coeff = DiffusionCoefficient("legendre")
    elif kind == "power":
        if value is None or not value > 0:
            raise ValueError(f"power coefficient needs gamma > 0, got {value!r}")
        coeff = DiffusionCoefficient("power", gamma=float(value))
    elif kind == "constant":
        if value is None or not value > 0:
            raise NonPositiveInterior(f"constant coefficient needs c > 0, got {value!r}")
        coeff = DiffusionCoefficient("constant", c=float(value))
    elif kind == "table":
        if samples is None:
            raise BadTable("table coefficient needs samples")
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise BadTable("table must be a list of at least two (x, a) pairs")
        xs, as_ = arr[:, 0].copy(), arr[:, 1].copy()
        if np.any(np.diff(xs) <= 0):
            raise BadTable("table x values must be strictly increasing")
        if xs[0] != -1.0 or xs[-1] != 1.0:
            raise BadTable(f"table must span [-1, 1], got [{xs[0]}, {xs[-1]}]")
        xs.flags.writeable = False
        as_.flags.writeable = False
        coeff = DiffusionCoefficient("table", table_x=xs, table_a=as_, source=source)
    else:
        raise ValueError(f"unknown coefficient kind {kind!r}; expected one of {KINDS}")
    _validate(coeff)
    return coeff


def _validate(coeff: DiffusionCoefficient) -> None:
    xs = np.linspace(-1.0, 1.0, _N_CHECK)[1:-1]
    if coeff.kind == "table":
        inner = coeff.table_x[1:-1]
        xs = np.concatenate([xs, inner])
    vals = coeff.a(xs)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0.0):
        bad = xs[np.argmin(vals)]
        raise NonPositiveInterior(f"a(x) <= 0 at interior point x = {bad:.6g}")
    if coeff.kind == "table":
        ends = np.abs(coeff.table_a[[0, -1]])
        if np.any(coeff.table_a[[0, -1]] < 0):
            raise NonPositiveInterior("a(+-1) must be nonnegative")
        # half-degenerate tables are neither family; reject them outright
        if np.any(ends <= _TABLE_ENDPOINT_TOL) and not np.all(ends <= _TABLE_ENDPOINT_TOL):
            raise BadTable("table must vanish at both endpoints or at neither")


def parse_coefficient(text: str, base_dir: Path | None = None) -> DiffusionCoefficient:
    """Parse ``legendre | power:<g> | constant:<c> | table:<path>``."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "legendre":
        if arg:
            raise ValueError("legendre takes no argument")
        return make_coefficient("legendre")
    if kind in ("power", "constant"):
        try:
            value = float(arg)
        except ValueError:
            raise ValueError(f"{kind} needs a numeric argument, got {arg!r}") from None
        return make_coefficient(kind, value)
    if kind == "table":
        path = Path(arg.strip())
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return make_coefficient("table", samples=read_table(path), source=str(path))
    raise ValueError(f"unknown coefficient descriptor {text!r}")


def read_table(path) -> list[tuple[float, float]]:
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if lineno == 1:  # header
                        continue
                    raise BadTable(f"{path}:{lineno}: expected two numbers, got {row!r}")
    except OSError as exc:
        raise BadTable(f"cannot read coefficient table {path}: {exc}") from exc
    return rows


# --------------------------------------------------------------------------
# antiderivative and integrability

def antiderivative(coeff: DiffusionCoefficient) -> Callable:
    """Return ``A(x) = int_0^x ds / a(s)`` as a vectorized callable on (-1, 1)."""
    if coeff.kind == "legendre":
        return np.arctanh
    if coeff.kind == "constant":
        c = coeff.c
        return lambda x: np.asarray(x, dtype=np.float64) / c
    if coeff.kind == "power":
        g = coeff.gamma
        return lambda x: np.asarray(x) * hyp2f1(0.5, g, 1.5, np.asarray(x) ** 2)
    return _table_antiderivative(coeff.table_x, coeff.table_a)


def _table_antiderivative(xs, as_):
    # exact integral of 1/a over each linear piece, accumulated from x = 0
    def seg_integral(x0, a0, x1, a1):
        dx = x1 - x0
        if a0 <= 0 or a1 <= 0:
            return math.inf
        if abs(a1 - a0) <= 1e-14 * max(a0, a1):
            return dx / a0
        return dx * math.log(a1 / a0) / (a1 - a0)

    knots = np.unique(np.concatenate([xs, [0.0]]))
    kvals = np.interp(knots, xs, as_)
    i0 = int(np.searchsorted(knots, 0.0))
    cum = np.zeros_like(knots)
    for i in range(i0 + 1, len(knots)):
        cum[i] = cum[i - 1] + seg_integral(knots[i - 1], kvals[i - 1], knots[i], kvals[i])
    for i in range(i0 - 1, -1, -1):
        cum[i] = cum[i + 1] - seg_integral(knots[i], kvals[i], knots[i + 1], kvals[i + 1])

    def A(x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        j = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 2)
        out = np.empty_like(x)
        for n, (xi, ji) in enumerate(zip(x, j)):
            ai = float(np.interp(xi, xs, as_))
            # anchor at the knot nearer the origin; the far one may have a = 0
            if xi >= 0.0:
                out[n] = cum[ji] + seg_integral(knots[ji], kvals[ji], xi, ai)
            else:
                out[n] = cum[ji + 1] - seg_integral(xi, ai, knots[ji + 1], kvals[ji + 1])
        return out

    return A


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gauss(f, lo, hi, breaks=()):
    pts = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        mid, half = 0.5 * (p + q), 0.5 * (q - p)
        total += half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))
    return total


def shell_increments(f, levels: int = 40, breaks=()) -> tuple[float, np.ndarray]:
    """Integrate ``f`` over (-1, 1) by geometric shells toward both endpoints.

    Returns the core integral over [-1/2, 1/2] and the array of shell
    contributions ``d_j`` over ``1/2**(j+1) <= 1 - |x| <= 1/2**j`` (both
    sides), ``j = 1 .. levels``.
    """
    core = _gauss(f, -0.5, 0.5, tuple(breaks) + (0.0,))
    d = np.empty(levels)
    for j in range(1, levels + 1):
        outer, inner = 1.0 - 0.5**j, 1.0 - 0.5 ** (j + 1)
        d[j - 1] = _gauss(f, outer, inner, breaks) + _gauss(f, -inner, -outer, breaks)
    return core, d


def extrapolate_series(core: float, d: np.ndarray, tail: int = 6,
                       conv_ratio: float = 0.95, div_ratio: float = 0.985):
    """Decide convergence of ``core + sum(d)`` from the decay of the last shells.

    Returns ``(converged, estimate)``; ``estimate`` adds the geometric tail
    implied by the observed ratio.  Raises :class:`InconclusiveIntegrability`
    when the ratios neither settle below ``conv_ratio`` nor above
    ``div_ratio``.
    """
    last = np.abs(d[-(tail + 1):])
    if np.all(last == 0.0):
        return True, core + float(np.sum(d))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = last[1:] / last[:-1]
    if np.all(np.isfinite(ratios)) and np.max(ratios) < conv_ratio:
        r = float(ratios[-1])
        return True, core + float(np.sum(d)) + float(last[-1]) * r / (1.0 - r)
    if np.all(~np.isfinite(ratios) | (ratios > div_ratio)):
        return False, math.inf
    raise InconclusiveIntegrability(
        f"shell ratios {np.array2string(ratios, precision=4)} do not stabilize")


def classify_degeneracy(coeff: DiffusionCoefficient, levels: int = 40) -> DegeneracyReport:
    A = antiderivative(coeff)
    if coeff.kind == "legendre":
        return DegeneracyReport(True, True, A)
    if coeff.kind == "constant":
        return DegeneracyReport(False, True, A)
    if coeff.kind == "power":
        # near x = 1: 1/a ~ (2(1-x))**-gamma, A ~ (1-x)**(1-gamma) (log at gamma=1)
        g = coeff.gamma
        return DegeneracyReport(g >= 1.0, g < 2.0, A)
    return classify_numerically(coeff, levels)


def classify_numerically(coeff: DiffusionCoefficient, levels: int = 40) -> DegeneracyReport:
    """Shell quadrature + tail extrapolation; works for every kind."""
    A = antiderivative(coeff)
    breaks = tuple(coeff.table_x) if coeff.kind == "table" else ()
    with np.errstate(divide="ignore"):
        core, d = shell_increments(lambda x: 1.0 / coeff.a(x), levels, breaks)
    inv_converges, _ = extrapolate_series(core, d)
    core, d = shell_increments(lambda x: np.abs(A(x)), levels, breaks)
    A_converges, int_abs = extrapolate_series(core, d)
    return DegeneracyReport(
        strongly_degenerate=not inv_converges,
        A_integrable=A_converges,
        A_eval=A,
        method="shell-quadrature",
        int_abs_A=int_abs if A_converges else None,
    )
