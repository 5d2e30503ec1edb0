"""Static multiplicative control steering v0 into an eps-ball around v_d.

The construction: for a smooth positive target ``v_d`` the potential

    alpha_*(x) = -(a v_d')'(x) / v_d(x)

makes ``v_d`` a zero-eigenvalue ground state of ``(a u_x)_x + alpha_* u``.
Adding a constant ``beta`` shifts every eigenvalue by ``beta``.  Choosing the
horizon ``T`` so that every non-ground mode has decayed by
``exp(-lambda_2 T)`` and ``beta`` so that the ground component grows to exactly
``v_d`` leaves an error of at most ``eps`` at time ``T``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coefficient import DiffusionCoefficient
from .discretization import StateField, assemble, flux_divergence, inner_product, norm
from .errors import (DegenerateTarget, GroundModeMismatch, HorizonClamped,
                     NegativeTarget, NonpositiveGap, NonpositiveOverlap,
                     NotNonnegative, ZeroHorizon, ZeroInitialState)
from .spectral import SpectralDecomposition, eigendecompose

MODES = ("T1", "C1")
NEG_TOL = 1e-12
MIN_TARGET = 1e-10
GROUND_MODE_TOL = 1e-3
# overlaps below this fraction of ||v0|| ||v_d|| are roundoff, not signal
OVERLAP_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class TargetState:
    field: StateField
    min_value: float
    derivatives: tuple[Callable, Callable] | None = None
    mollification_error: float = 0.0

    def __post_init__(self):
        if float(np.min(self.field.values)) < self.min_value:
            raise ValueError("target values fall below the declared min_value")

    @classmethod
    def from_field(cls, field_: StateField, derivatives=None) -> "TargetState":
        return cls(field_, float(np.min(field_.values)), derivatives)


@dataclass(frozen=True, eq=False)
class ControlPlan:
    alpha_star: StateField
    beta: float
    horizon_T: float
    epsilon: float
    lambda1: float
    lambda2: float
    overlap: float
    predicted_error: float
    v0_norm: float
    target_norm: float
    mode: str
    clamped: bool = False
    target: TargetState | None = field(default=None, repr=False)
    spectrum: SpectralDecomposition | None = field(default=None, repr=False)

    @property
    def control(self) -> StateField:
        """The applied static control ``alpha_* + beta``."""
        return self.alpha_star + self.beta

    def identity_residual(self) -> float:
        """Relative defect of ``exp((beta - lambda_2) T) ||v0|| = eps``."""
        lhs = math.exp((self.beta - self.lambda2) * self.horizon_T) * self.v0_norm
        return abs(lhs - self.epsilon) / self.epsilon

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "T": self.horizon_T,
            "beta": self.beta,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "overlap": self.overlap,
            "predicted_error": self.predicted_error,
            "clamped": self.clamped,
            "mode": self.mode,
        }


def _gaussian_smooth(values: np.ndarray, h: float, delta: float) -> np.ndarray:
    half = int(math.ceil(5.0 * delta / h))
    if half == 0:
        return values.copy()
    offsets = np.arange(-half, half + 1) * h
    kernel = np.exp(-0.5 * (offsets / delta) ** 2)
    kernel /= kernel.sum()
    # even reflection about the faces x = -1, 1
    padded = np.pad(values, half, mode="symmetric")
    return np.convolve(padded, kernel, mode="valid")


def mollify_target(raw: StateField, delta: float) -> TargetState:
    """Gaussian smoothing (std ``delta``) followed by the floor ``max(., delta)``."""
    if not delta > 0:
        raise ValueError(f"mollifier width must be positive, got {delta!r}")
    v = raw.values
    if np.any(v < -NEG_TOL):
        i = int(np.argmin(v))
        raise NegativeTarget(
            f"target is negative ({v[i]:.3e}) at x = {raw.grid.centers[i]:.6g}")
    smooth = _gaussian_smooth(v, raw.grid.h, delta)
    result = np.maximum(smooth, delta)
    field_ = StateField(raw.grid, result)
    dist = norm(field_ - raw)
    return TargetState(field_, float(np.min(result)), None, dist)


def synthesize_alpha_star(coeff: DiffusionCoefficient, target: TargetState,
                          use_analytic: bool = True) -> StateField:
    """Potential making the target a stationary ground state.

    With ``target.derivatives = (dv, d2v)`` and ``use_analytic`` the continuum
    formula is sampled at the cell centers; otherwise the same conservative
    stencil as :func:`assemble` is applied to the target, which makes the
    target an exact discrete null vector.
    """
    if target.min_value < MIN_TARGET:
        raise DegenerateTarget(
            f"target minimum {target.min_value:.3e} below {MIN_TARGET:g}")
    grid = target.field.grid
    vd = target.field.values
    if use_analytic and target.derivatives is not None:
        dv, d2v = target.derivatives
        x = grid.centers
        flux_div = coeff.a_prime(x) * dv(x) + coeff.a(x) * d2v(x)
    else:
        flux_div = flux_divergence(coeff, grid, vd)
    return StateField(grid, -flux_div / vd)


def check_admissibility(v0: StateField, target: TargetState, mode: str) -> float:
    """Validate the hypotheses for ``mode`` and return ``<v0, v_d>``."""
    mode = mode.upper()
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "T1" and np.any(v0.values < -NEG_TOL):
        i = int(np.argmin(v0.values))
        raise NotNonnegative(
            f"initial state is negative ({v0.values[i]:.3e}) at "
            f"x = {v0.grid.centers[i]:.6g}; use mode C1 for sign-changing data")
    if norm(v0) == 0.0:
        raise ZeroInitialState("initial state vanishes identically")
    overlap = inner_product(v0, target.field)
    if mode == "C1" and not _overlap_positive(overlap, v0, target):
        raise NonpositiveOverlap(
            f"<v0, v_d> = {overlap:.3e} must be positive")
    return overlap


def _overlap_positive(overlap: float, v0: StateField, target: TargetState) -> bool:
    return overlap > OVERLAP_RTOL * norm(v0) * norm(target.field)


def choose_horizon(epsilon: float, v0: StateField, target: TargetState,
                   lambda2: float) -> float:
    """Horizon from ``exp(-lambda_2 T) = eps <v0, v_d> / (||v0|| ||v_d||^2)``.

    Returns 0 with a :class:`HorizonClamped` warning when the right-hand side
    is at least 1.
    """
    if not lambda2 > 1e-8:
        raise NonpositiveGap(f"lambda_2 = {lambda2:.3e} is not positive")
    overlap = inner_product(v0, target.field)
    if not _overlap_positive(overlap, v0, target):
        raise NonpositiveOverlap(f"<v0, v_d> = {overlap:.3e} must be positive")
    ratio = epsilon * overlap / (norm(v0) * norm(target.field) ** 2)
    if ratio >= 1.0:
        warnings.warn(
            f"eps = {epsilon:g} is too loose for the horizon formula "
            f"(ratio {ratio:.3g} >= 1); clamping T to 0", HorizonClamped, stacklevel=2)
        return 0.0
    return -math.log(ratio) / lambda2


def choose_beta(horizon_T: float, v0: StateField, target: TargetState) -> float:
    """Shift with ``exp(beta T) <v0, omega_1> = ||v_d||``."""
    if not horizon_T > 0.0:
        raise ZeroHorizon("beta is undefined for a zero horizon")
    overlap = inner_product(v0, target.field)
    if not _overlap_positive(overlap, v0, target):
        raise NonpositiveOverlap(f"<v0, v_d> = {overlap:.3e} must be positive")
    return math.log(norm(target.field) ** 2 / overlap) / horizon_T


def build_plan(coeff: DiffusionCoefficient, v0: StateField, raw_target: StateField,
               epsilon: float, mode: str = "T1", *, mollifier_delta: float = 0.02,
               target_derivatives=None) -> ControlPlan:
    """Mollify, synthesize alpha_*, decompose, then fix T and beta.

    ``target_derivatives`` (a pair of callables) switches alpha_* synthesis to
    the continuum formula; the mollifier is then skipped, since the caller
    vouches for a smooth positive target.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    mode = mode.upper()
    if target_derivatives is None:
        target = mollify_target(raw_target, mollifier_delta)
    else:
        if np.any(raw_target.values <= 0):
            raise DegenerateTarget("analytic targets must be strictly positive")
        target = TargetState.from_field(raw_target, target_derivatives)
    overlap = check_admissibility(v0, target, mode)
    alpha_star = synthesize_alpha_star(coeff, target)
    op = assemble(coeff, alpha_star, v0.grid)
    decomp = eigendecompose(op)
    lam1, lam2 = float(decomp.lambdas[0]), float(decomp.lambdas[1])

    vd_norm = norm(target.field)
    ground = decomp.mode(1)
    mismatch = norm(ground - target.field * (1.0 / vd_norm))
    if mismatch > GROUND_MODE_TOL:
        raise GroundModeMismatch(
            f"ground mode does not match the target: lambda_1 = {lam1:.3e}, "
            f"||omega_1 - v_d/||v_d|| || = {mismatch:.3e}")

    v0_norm = norm(v0)
    horizon = choose_horizon(epsilon, v0, target, lam2)
    if horizon > 0.0:
        beta = choose_beta(horizon, v0, target)
        clamped = False
    else:
        beta = 0.0
        clamped = True
    predicted = math.exp((beta - lam2) * horizon) * v0_norm
    return ControlPlan(
        alpha_star=alpha_star, beta=beta, horizon_T=horizon, epsilon=float(epsilon),
        lambda1=lam1, lambda2=lam2, overlap=overlap, predicted_error=predicted,
        v0_norm=v0_norm, target_norm=vd_norm, mode=mode, clamped=clamped,
        target=target, spectrum=decomp)
