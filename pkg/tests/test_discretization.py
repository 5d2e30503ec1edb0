import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from degencontrol import (StateField, assemble, b_norm, build_grid, inner_product,
                          make_coefficient, norm, read_field_csv, weighted_seminorm,
                          write_field_csv)
from degencontrol.discretization import flux_divergence, write_operator_csv
from degencontrol.errors import EmptyTrace, GridMismatch, TooFewCells

COEFFS = [make_coefficient("legendre"), make_coefficient("power", 2.5),
          make_coefficient("constant", 0.7)]
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_grid_geometry():
    g = build_grid(8)
    assert g.h == 0.25
    np.testing.assert_allclose(g.centers, np.linspace(-0.875, 0.875, 8))
    assert g.faces[0] == -1.0 and g.faces[-1] == 1.0
    assert len(g.faces) == 9
    with pytest.raises(ValueError):
        g.centers[0] = 0.0


@pytest.mark.parametrize("n", [0, 3])
def test_too_few_cells(n):
    with pytest.raises(TooFewCells):
        build_grid(n)


def test_state_field_arithmetic_and_shapes():
    g = build_grid(6)
    u = StateField.sample(g, lambda x: x)
    w = StateField.constant(g, 2.0)
    np.testing.assert_allclose((u + w - w).values, u.values)
    np.testing.assert_allclose((u * 3).values, 3 * g.centers)
    np.testing.assert_allclose((-u).values, -g.centers)
    with pytest.raises(GridMismatch):
        StateField(g, np.ones(5))
    with pytest.raises(GridMismatch):
        inner_product(u, StateField.constant(build_grid(7), 1.0))
    assert norm(w) == pytest.approx(2.0 * np.sqrt(2.0))


@pytest.mark.parametrize("coeff", COEFFS, ids=lambda c: c.kind)
def test_operator_symmetric_conservative_dissipative(coeff, rng):
    g = build_grid(40)
    op = assemble(coeff, None, g)
    dense = op.to_dense()
    np.testing.assert_array_equal(dense, dense.T)
    # zero flux at the ends: the total mass of A u vanishes
    u = StateField(g, rng.standard_normal(40))
    assert abs(np.sum(op.apply(u))) < 1e-9 * np.abs(op.apply(u)).max()
    # <A u, u> = -|u|_{1,a}^2
    lhs = inner_product(StateField(g, op.apply(u)), u)
    assert lhs == pytest.approx(-weighted_seminorm(coeff, u) ** 2, rel=1e-12)
    # off-diagonal couplings are a(face) / h^2 and nonnegative
    np.testing.assert_allclose(op.offdiag, coeff.a(g.faces[1:-1]) / g.h**2)
    assert np.all(op.offdiag >= 0)


def test_stencil_matches_assembled_operator(legendre, rng):
    g = build_grid(25)
    u = rng.standard_normal(25)
    np.testing.assert_allclose(flux_divergence(legendre, g, u),
                               assemble(legendre, None, g).apply(u), rtol=1e-13, atol=1e-10)


def test_alpha_enters_the_diagonal(legendre):
    g = build_grid(10)
    alpha = StateField.sample(g, np.cos)
    a0, a1 = assemble(legendre, None, g), assemble(legendre, alpha, g)
    np.testing.assert_allclose(a1.diag - a0.diag, alpha.values)
    np.testing.assert_allclose(a0.shifted(0.5).diag, a0.diag + 0.5)
    with pytest.raises(GridMismatch):
        assemble(legendre, StateField.constant(build_grid(11), 0.0), g)


def test_legendre_scheme_preserves_polynomial_degree(legendre):
    # x^k maps to -k(k+1) x^k plus lower-degree terms, boundary cells included,
    # so the discrete spectrum starts with k(k+1) exactly
    g = build_grid(64)
    op = assemble(legendre, None, g)
    x = g.centers
    for k in range(1, 7):
        image = op.apply(x**k)
        coef = np.polynomial.polynomial.polyfit(x, image, k + 2)
        np.testing.assert_allclose(coef[k + 1:], 0.0, atol=1e-6)
        assert coef[k] == pytest.approx(-k * (k + 1), rel=1e-9)
    lam = np.sort(np.linalg.eigvalsh(-op.to_dense()))[:8]
    np.testing.assert_allclose(lam, [k * (k + 1) for k in range(8)], atol=1e-9)


@pytest.mark.parametrize("coeff", COEFFS[:2], ids=lambda c: c.kind)
def test_second_order_consistency(coeff):
    # (a u')' for u = cos(2x) + x^3, interior cells away from the degenerate ends
    def exact(x):
        du = -2 * np.sin(2 * x) + 3 * x**2
        d2u = -4 * np.cos(2 * x) + 6 * x
        return coeff.a_prime(x) * du + coeff.a(x) * d2u

    errs = []
    for n in (100, 200, 400):
        g = build_grid(n)
        u = np.cos(2 * g.centers) + g.centers**3
        mask = np.abs(g.centers) < 0.8
        errs.append(np.max(np.abs(flux_divergence(coeff, g, u) - exact(g.centers))[mask]))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)


@settings(max_examples=25, deadline=None)
@given(values=arrays(np.float64, st.integers(4, 60), elements=finite))
def test_field_csv_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "f.csv"
    field = StateField(build_grid(len(values)), values)
    write_field_csv(path, field)
    back = read_field_csv(path)
    np.testing.assert_array_equal(back.values, field.values)
    np.testing.assert_array_equal(back.grid.centers, field.grid.centers)
    assert b"\r" not in path.read_bytes()


def test_csv_interpolates_onto_other_grids(tmp_path):
    src = StateField.sample(build_grid(50), lambda x: 2 * x + 1)
    write_field_csv(tmp_path / "f.csv", src)
    dst = read_field_csv(tmp_path / "f.csv", build_grid(20))
    inside = np.abs(dst.grid.centers) < 0.98
    np.testing.assert_allclose(dst.values[inside], 2 * dst.grid.centers[inside] + 1)
    (tmp_path / "bad.csv").write_text("x,v\n0.1,1\n0.2,oops\n")
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "bad.csv", build_grid(8))


def test_operator_dump(tmp_path, legendre):
    op = assemble(legendre, None, build_grid(5))
    write_operator_csv(tmp_path / "op.csv", op)
    rows = (tmp_path / "op.csv").read_text().splitlines()
    assert rows[0] == "row,col,entry"
    assert len(rows) == 1 + 5 + 2 * 4


class _Trace:
    def __init__(self, grid, times, states):
        self.grid, self.times, self.states = grid, np.asarray(times), np.asarray(states)


def test_b_norm_of_stationary_state(legendre):
    g = build_grid(30)
    x = g.centers
    states = np.array([x, x, x])
    tr = _Trace(g, [0.0, 0.5, 1.0], states)
    semi = weighted_seminorm(legendre, StateField(g, x)) ** 2
    assert b_norm(tr, legendre) == pytest.approx(norm(StateField(g, x)) ** 2 + 2 * semi)
    with pytest.raises(EmptyTrace):
        b_norm(_Trace(g, [], np.zeros((0, 30))), legendre)
