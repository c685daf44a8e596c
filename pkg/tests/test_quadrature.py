import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartogs.errors import ProximityError, SingularityError
from hartogs.expr import wirtinger_residual
from hartogs.geometry import build_lattice_contour
from hartogs.quadrature import (QuadratureConfig, cauchy_compact, cauchy_rectangle, contour_agreement,
                                gauss_legendre, integrate_cauchy_segment, winding_number)

from oracles import mp_segment_cauchy, residue_cauchy
from scenarios import closed_disc, open_disc


def one(t):
    return np.ones_like(t)


def zero(t):
    return np.zeros_like(t)


@pytest.fixture(scope="module")
def contour():
    return build_lattice_contour(closed_disc(0.1), open_disc(1.0), 0.4)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(gauss_order=1)
    with pytest.raises(ValueError):
        QuadratureConfig(rtol=0)


def test_gauss_nodes_are_symmetric():
    x, w = gauss_legendre(8)
    assert np.array_equal(x, -x[::-1]) and w.sum() == pytest.approx(2.0, abs=1e-15)


def test_segment_closed_form():
    res = integrate_cauchy_segment(one, (-1, 1), 1j)
    assert abs(res.value - cmath.log((1 - 1j) / (-1 - 1j))) <= 1e-12
    assert abs(res.value - 1j * cmath.pi / 2) <= 1e-12


def test_zero_function_is_exactly_zero():
    assert integrate_cauchy_segment(zero, (0.3 - 1j, 2 + 0.5j), 0.1).value == 0


def test_midpoint_is_too_close():
    with pytest.raises(ProximityError):
        integrate_cauchy_segment(one, (-1, 1), 0)


@pytest.mark.parametrize("seg, z", [((-1, 1), 0.3 + 0.2j), ((0.5j, 2 + 0.5j), 1 + 0.55j), ((1, 1 + 1j), -2)])
def test_segment_against_mpmath(seg, z):
    got = integrate_cauchy_segment(np.exp, seg, z).value
    want = mp_segment_cauchy(mpmath.exp, seg[0], seg[1], z)
    assert abs(got - want) <= 1e-10 * max(1, abs(want))


def test_rectangle_examples():
    r = (-1, 1, -1, 1)
    assert abs(cauchy_rectangle(one, r, 0).value - 1) <= 1e-10
    assert abs(cauchy_rectangle(lambda t: t * t, r, 0.5 + 0.5j).value - 0.5j) <= 1e-10
    assert abs(cauchy_rectangle(one, r, 3).value) <= 1e-10


def test_degenerate_rectangle():
    with pytest.raises(ValueError):
        cauchy_rectangle(one, (1, 1, 0, 1), 0.5)


def test_compact_examples(contour):
    assert abs(cauchy_compact(np.exp, contour, 0.05).value - cmath.exp(0.05)) <= 1e-9
    v = cauchy_compact(lambda t: 1 / t, contour, 0.5).value
    assert abs(v - (-2)) <= 1e-8
    assert abs(winding_number(contour, 0.02 - 0.03j) - 1) <= 1e-9


def test_residue_oracle_inside_p_off_k(contour):
    # 1/t has a pole at 0 inside P; at z in P the residues at 0 and z cancel
    for z in (0.2 + 0.1j, -0.3j, 0.35 - 0.25j):
        assert contour.contains(z, margin=contour.h / 10)
        want = residue_cauchy({0j: 1.0}, lambda t: 1 / t, z, lambda q: contour.contains(q))
        assert abs(want) < 1e-15
        assert abs(cauchy_compact(lambda t: 1 / t, contour, z).value - want) <= 1e-8


def test_exclusion_zone(contour):
    a, _ = contour.segments[0]
    with pytest.raises(ProximityError):
        cauchy_compact(one, contour, a + contour.h / 20 * 1j)


def test_nonfinite_integrand_is_reported(contour):
    def bad(t):
        return np.where(t.real > 0.3, np.inf, 1.0)

    with pytest.raises(SingularityError, match="quadrature node"):
        cauchy_compact(bad, contour, 0)


def test_contour_agreement(contour):
    other = build_lattice_contour(closed_disc(0.1), open_disc(1.0), 0.2)
    zs = [0.02, -0.03j, 0.05 + 0.05j]
    assert contour_agreement(np.exp, contour, other, zs) <= 1e-9
    assert contour_agreement(np.exp, contour, other, []) == 0
    assert contour_agreement(lambda t: 1 / t, contour, other, [0.2 + 0.1j, -0.15]) <= 1e-8


def test_orientation_negates_exactly(contour):
    for z in (0.05, 0.6 + 0.1j, -0.2j):
        assert cauchy_compact(np.sin, contour.reversed(), z).value == -cauchy_compact(np.sin, contour, z).value


coef = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


@settings(max_examples=25, deadline=None)
@given(coef, coef, st.sampled_from([0.05, 0.3 + 0.2j, 0.7j]))
def test_linearity(alpha, beta, z):
    r = (-1, 1, -1, 1)
    f, g = np.exp, np.cos
    lhs = cauchy_rectangle(lambda t: alpha * f(t) + beta * g(t), r, z).value
    rhs = alpha * cauchy_rectangle(f, r, z).value + beta * cauchy_rectangle(g, r, z).value
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@pytest.mark.parametrize("z", [-0.5 + 0.3j, 0.4 - 0.7j, -1e-3 + 0.2j, 1e-3 - 0.6j])
def test_square_gluing(z):
    # R1 = (-1,0)x(-1,1), R2 = (0,1)x(-1,1); their shared side is re = 0
    for f in (np.exp, lambda t: t ** 3 - 2 * t, np.sin):
        s = cauchy_rectangle(f, (-1, 0, -1, 1), z).value + cauchy_rectangle(f, (0, 1, -1, 1), z).value
        assert abs(s - cauchy_rectangle(f, (-1, 1, -1, 1), z).value) <= 2e-10


def test_compact_integral_is_holomorphic_in_z(contour):
    rng = np.random.default_rng(4)
    pts = contour.cell_centers()[:, None] + contour.h * rng.uniform(-0.3, 0.3, (9, 2)) @ np.array([1, 1j])
    pts = pts.ravel()
    pts = pts[contour.contains_array(pts, margin=contour.h / 5)][:20]
    assert len(pts) == 20
    for w in pts:
        w = complex(w)

        def integral(z):
            return cauchy_compact(lambda t: 1 / t, contour, z[0]).value

        assert wirtinger_residual(integral, (w,), 1) <= 1e-6
