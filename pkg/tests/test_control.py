import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degencontrol import (StateField, TargetState, assemble, build_grid, build_plan,
                          choose_beta, choose_horizon, make_coefficient, mollify_target,
                          norm, synthesize_alpha_star)
from degencontrol.control import check_admissibility
from degencontrol.errors import (DegenerateTarget, GroundModeMismatch, HorizonClamped,
                                 NegativeTarget, NonpositiveGap, NonpositiveOverlap,
                                 NotNonnegative, ZeroHorizon, ZeroInitialState)
from degencontrol.spectral import eigendecompose

LEG = make_coefficient("legendre")


def target(grid, f):
    return TargetState.from_field(StateField.sample(grid, f))


def test_alpha_star_oracle_for_affine_target():
    # frozen with sympy: -((1 - x^2) (2 + x)')' / (2 + x) = 2x / (2 + x)
    # the stencil is exact on affine data, whatever the resolution
    for n in (10, 100, 400):
        g = build_grid(n)
        x = g.centers
        a = synthesize_alpha_star(LEG, target(g, lambda s: 2 + s))
        np.testing.assert_allclose(a.values, 2 * x / (2 + x), rtol=0, atol=1e-10)


def test_analytic_and_stencil_routes_agree():
    errs = []
    for n in (100, 200, 400):
        g = build_grid(n)
        f = lambda s: 1.5 + np.sin(2 * s)
        derivs = (lambda s: 2 * np.cos(2 * s), lambda s: -4 * np.sin(2 * s))
        vd = StateField.sample(g, f)
        analytic = synthesize_alpha_star(LEG, TargetState.from_field(vd, derivs))
        stencil = synthesize_alpha_star(LEG, TargetState.from_field(vd), use_analytic=False)
        errs.append(np.max(np.abs(analytic.values - stencil.values)))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_target_is_discrete_null_vector():
    g = build_grid(150)
    t = target(g, lambda s: 1.2 + 0.5 * np.cos(3 * s))
    op = assemble(LEG, synthesize_alpha_star(LEG, t), g)
    assert np.max(np.abs(op.apply(t.field))) < 1e-9


def test_degenerate_target_rejected():
    g = build_grid(20)
    with pytest.raises(DegenerateTarget):
        synthesize_alpha_star(LEG, target(g, lambda s: (s - g.centers[3]) ** 2))


def test_mollifier():
    g = build_grid(400)
    raw = StateField.sample(g, lambda s: (s > 0).astype(float))
    t = mollify_target(raw, 0.05)
    assert t.min_value >= 0.05
    assert np.all(np.diff(t.field.values) >= -1e-15)
    assert t.mollification_error > 0
    smooth = StateField.constant(g, 1.0)
    assert mollify_target(smooth, 0.02).mollification_error < 1e-14
    with pytest.raises(NegativeTarget):
        mollify_target(StateField.sample(g, lambda s: s), 0.02)
    with pytest.raises(ValueError):
        mollify_target(smooth, 0.0)


def test_admissibility():
    g = build_grid(40)
    t = target(g, lambda s: np.ones_like(s))
    with pytest.raises(NotNonnegative):
        check_admissibility(StateField.sample(g, lambda s: s), t, "T1")
    with pytest.raises(ZeroInitialState):
        check_admissibility(StateField.constant(g, 0.0), t, "C1")
    with pytest.raises(NonpositiveOverlap):
        check_admissibility(StateField.sample(g, lambda s: s), t, "C1")
    with pytest.raises(NonpositiveOverlap):
        check_admissibility(StateField.sample(g, lambda s: s - 0.5), t, "C1")
    assert check_admissibility(StateField.sample(g, lambda s: s + 0.3), t, "c1") == \
        pytest.approx(0.6)
    with pytest.raises(ValueError):
        check_admissibility(StateField.constant(g, 1.0), t, "T2")


def test_horizon_and_beta_formulas():
    g = build_grid(40)
    t = target(g, lambda s: np.ones_like(s))
    v0 = StateField.sample(g, lambda s: 1 + s / 2)
    eps, lam2 = 1e-2, 2.0
    T = choose_horizon(eps, v0, t, lam2)
    ratio = eps * 2.0 / (norm(v0) * 2.0)
    assert T == pytest.approx(-math.log(ratio) / lam2, rel=1e-14)
    beta = choose_beta(T, v0, t)
    assert beta == pytest.approx(0.0, abs=1e-14)  # overlap equals ||v_d||^2 here
    assert math.exp((beta - lam2) * T) * norm(v0) == pytest.approx(eps, rel=1e-12)
    with pytest.raises(NonpositiveGap):
        choose_horizon(eps, v0, t, 0.0)
    with pytest.raises(ZeroHorizon):
        choose_beta(0.0, v0, t)
    with pytest.warns(HorizonClamped):
        assert choose_horizon(10.0, v0, t, lam2) == 0.0


@settings(max_examples=15, deadline=None)
@given(eps=st.floats(1e-6, 0.5), shift=st.floats(0.05, 3.0), slope=st.floats(-1, 1))
def test_plan_identity_holds(eps, shift, slope):
    g = build_grid(64)
    v0 = StateField.sample(g, lambda s: shift + slope * s)
    vd = StateField.sample(g, lambda s: 1.0 + 0.3 * np.cos(np.pi * s))
    mode = "T1" if shift >= abs(slope) else "C1"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HorizonClamped)
        plan = build_plan(LEG, v0, vd, eps, mode)
    if plan.clamped:
        assert plan.horizon_T == 0.0 and plan.beta == 0.0
    else:
        assert plan.identity_residual() <= 1e-9
        assert plan.predicted_error == pytest.approx(eps, rel=1e-9)


def test_plan_summary_and_control():
    g = build_grid(100)
    v0 = StateField.sample(g, lambda s: 1 + s / 2)
    plan = build_plan(LEG, v0, StateField.constant(g, 1.0), 1e-2)
    assert set(plan.summary()) >= {"T", "beta", "lambda1", "lambda2", "overlap",
                                   "predicted_error"}
    np.testing.assert_allclose(plan.control.values, plan.alpha_star.values + plan.beta)
    assert plan.lambda2 == pytest.approx(2.0, abs=1e-10)
    assert abs(plan.lambda1) < 1e-10


def test_analytic_target_route():
    g = build_grid(200)
    vd = StateField.sample(g, lambda s: 2 + s)
    derivs = (lambda s: np.ones_like(s), lambda s: np.zeros_like(s))
    plan = build_plan(LEG, StateField.constant(g, 1.0), vd, 1e-2, target_derivatives=derivs)
    assert plan.target.mollification_error == 0.0
    with pytest.raises(DegenerateTarget):
        build_plan(LEG, StateField.constant(g, 1.0), StateField.sample(g, lambda s: s), 1e-2,
                   target_derivatives=derivs)


def test_ground_mode_mismatch(monkeypatch):
    # a broken synthesis (wrong sign) must be caught by the ground-mode check
    import degencontrol.control as control

    real = control.synthesize_alpha_star
    monkeypatch.setattr(control, "synthesize_alpha_star",
                        lambda c, t, **kw: -real(c, t, **kw))
    g = build_grid(60)
    with pytest.raises(GroundModeMismatch):
        build_plan(LEG, StateField.constant(g, 1.0),
                   StateField.sample(g, lambda s: 1.5 + np.cos(2 * s)), 1e-2)


def test_random_targets_have_target_ground_state(rng):
    g = build_grid(200)
    for _ in range(5):
        c = rng.uniform(-0.4, 0.4, 4)
        vd = StateField.sample(g, lambda s: 1.5 + sum(ci * np.cos((i + 1) * s) for i, ci in
                                                      enumerate(c)))
        alpha = synthesize_alpha_star(LEG, TargetState.from_field(vd))
        d = eigendecompose(assemble(LEG, alpha, g))
        assert abs(d.lambdas[0]) < 1e-9 * max(1, d.lambdas[1])
        cos = abs(g.h * d.modes[0] @ vd.values) / norm(vd)
        assert cos > 1 - 1e-12
