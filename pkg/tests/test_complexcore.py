import numpy as np
import pytest
from hypothesis import given, strategies as st

from hartogs.complexcore import (Polydisc, as_complex, insert_component, insert_component_array,
                                 polydisc_contains, project_component, project_skip, sup_distance, sup_norm)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
points = st.lists(cplx, min_size=2, max_size=5).map(tuple)


def test_project_skip_examples():
    assert project_skip(2, (1 + 1j, 3)) == (1 + 1j,)
    assert project_skip(1, (5, 2 - 1j, 7j)) == (2 - 1j, 7j)
    with pytest.raises(IndexError):
        project_skip(3, (1, 2))


def test_project_component_examples():
    assert project_component(1, (1 + 1j, 3)) == 1 + 1j
    assert project_component(2, (1 + 1j, 3)) == 3
    with pytest.raises(IndexError):
        project_component(0, (1,))


def test_project_skip_needs_two_coordinates():
    with pytest.raises(ValueError):
        project_skip(1, (1,))


def test_polydisc_examples():
    assert polydisc_contains(Polydisc((0, 0), 1), (0.5, 0.5j))
    assert not polydisc_contains(Polydisc((0, 0), 1), (1, 0))
    assert polydisc_contains(Polydisc((2,), 0.5), (2.4,))


def test_polydisc_rejects_bad_radius_and_dimension():
    with pytest.raises(ValueError):
        Polydisc((0,), 0.0)
    with pytest.raises(ValueError):
        Polydisc((0, 0), 1).contains((0,))


def test_as_complex_pairs_and_nonfinite():
    assert as_complex([1, -2]) == 1 - 2j
    with pytest.raises(ValueError):
        as_complex(float("nan"))


def test_closed_versus_open_membership():
    d = Polydisc((0,), 1.0)
    assert d.contains_closed((1,)) and not d.contains((1,))


def test_project_disc():
    d = Polydisc((1, 2j, 3), 0.5).project(2)
    assert d.center == (1, 3) and d.radius == 0.5


@given(points, st.data())
def test_skip_and_reinsert_roundtrip(z, data):
    i = data.draw(st.integers(1, len(z)))
    assert insert_component(i, project_skip(i, z), project_component(i, z)) == z


@given(points, st.data())
def test_array_insert_matches_scalar(z, data):
    i = data.draw(st.integers(1, len(z)))
    arr = insert_component_array(i, project_skip(i, z), np.array([z[i - 1]]))
    assert tuple(arr[0]) == z


dyadic = st.integers(-2048, 2048).map(lambda k: k / 1024)
dyadic_points = st.lists(st.builds(complex, dyadic, dyadic), min_size=1, max_size=4).map(tuple)


@given(dyadic_points, st.integers(-8, 8), st.data())
def test_affine_invariance_power_of_two(z, k, data):
    # dyadic z and integer centres keep r*z + x exact, so the check is bit-exact
    center = tuple(complex(data.draw(st.integers(-50, 50)), data.draw(st.integers(-50, 50))) for _ in z)
    r = 2.0 ** k
    moved = tuple(r * w + c for w, c in zip(z, center))
    assert Polydisc(center, r).contains(moved) == Polydisc((0,) * len(z), 1.0).contains(z)


@given(points, st.floats(0.1, 10), st.data())
def test_affine_invariance_general_radius(z, r, data):
    center = tuple(data.draw(cplx) for _ in z)
    moved = tuple(r * w + c for w, c in zip(z, center))
    m = max(abs(w) for w in z)
    if abs(m - 1) > 1e-6:  # away from the boundary rounding cannot flip membership
        assert Polydisc(center, r).contains(moved) == Polydisc((0,) * len(z), 1.0).contains(z)


@given(points, points)
def test_sup_distance_is_a_metric(z, w):
    if len(z) != len(w):
        return
    assert sup_distance(z, w) == sup_distance(w, z) >= 0
    assert sup_distance(z, z) == 0
    assert sup_norm(z) == sup_distance(z, (0,) * len(z))
