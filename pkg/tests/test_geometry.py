import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from grushin.errors import DimensionMismatch, DomainError, NonpositiveScale
from grushin.geometry import Point, d_K, dilate, invariants_arrays, pair_invariants, triangle_probe

coord = st.floats(-50, 50, allow_nan=False)


def naive_dK(x1, u1, x2, u2):
    R2 = np.dot(x1, x1) + np.dot(x2, x2)
    return math.sqrt(math.sqrt(R2 ** 2 + 4 * (u1 - u2) ** 2) - 2 * np.dot(x1, x2))


def test_degenerate_x():
    inv = pair_invariants(Point([0.0], 0.0), Point([0.0], 3.0))
    assert inv.R2 == 0 and inv.s == 3.0 and inv.a == 0.0
    assert inv.dK == pytest.approx(math.sqrt(6.0))
    assert inv.phi == pytest.approx(math.pi / 2)


def test_unit_pair():
    inv = pair_invariants(Point([1.0], 0.0), Point([0.0], 0.0))
    assert (inv.R2, inv.s, inv.a) == (1.0, 0.0, 0.0)
    assert inv.dK == pytest.approx(1.0) and inv.DK == pytest.approx(1.0) and inv.phi == 0.0


def test_identity_and_antipodal():
    g = Point([0.3, -1.2], 0.7)
    assert d_K(g, g) == 0.0
    x = np.array([0.3, -1.2])
    s = 2.5
    expected = math.sqrt(math.sqrt(4 * np.dot(x, x) ** 2 + 4 * s * s) + 2 * np.dot(x, x))
    assert d_K(Point(x, 0.0), Point(-x, s)) == pytest.approx(expected, rel=1e-14)


def test_origin_formula():
    assert d_K(Point([0.0, 0.0], 1.0), Point([0.0, 0.0], -3.0)) == pytest.approx(math.sqrt(8.0))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        d_K(Point([1.0], 0.0), Point([1.0, 2.0], 0.0))


def test_point_validation():
    with pytest.raises(DomainError):
        Point([math.inf], 0.0)
    with pytest.raises(DomainError):
        Point([], 0.0)


def test_dilate():
    g = dilate(Point([1.0, 1.0], 3.0), 2.0)
    assert g.x == (2.0, 2.0) and g.u == 12.0
    assert dilate(g, 1.0) == g
    with pytest.raises(NonpositiveScale):
        dilate(g, 0.0)


@given(st.lists(coord, min_size=6, max_size=6), st.sampled_from([0.5, 2.0, 10.0]))
def test_dilation_homogeneity(c, r):
    g, gp = Point(c[:2], c[2]), Point(c[3:5], c[5])
    d = d_K(g, gp)
    assert d_K(dilate(g, r), dilate(gp, r)) == pytest.approx(r * d, rel=1e-12, abs=1e-300)
    back = dilate(dilate(g, r), 1 / r)
    assert np.allclose(back.x, g.x, rtol=1e-15) and back.u == pytest.approx(g.u, rel=1e-15)


@given(st.lists(coord, min_size=8, max_size=8))
def test_invariant_identities(c):
    x1, x2 = np.array(c[:3]), np.array(c[3:6])
    inv = pair_invariants((x1, c[6]), (x2, c[7]))
    assert inv.DK ** 4 == pytest.approx(inv.R2 ** 2 + 4 * inv.s ** 2, rel=1e-12, abs=1e-300)
    assert inv.a * inv.R2 == pytest.approx(2 * np.dot(x1, x2), rel=1e-10, abs=1e-10 * (1 + inv.R2))
    assert inv.dK ** 2 == pytest.approx(inv.DK ** 2 - inv.a * inv.R2, rel=1e-9, abs=1e-9 * (1 + inv.DK ** 2))
    assert math.cos(inv.phi) * inv.DK ** 2 == pytest.approx(inv.R2, rel=1e-12, abs=1e-12 * inv.DK ** 2)
    assert math.sin(inv.phi) * inv.DK ** 2 == pytest.approx(2 * inv.s, rel=1e-12, abs=1e-12 * inv.DK ** 2)
    assert inv.dK ** 2 <= 2 * inv.DK ** 2 * (1 + 1e-12)
    assert -1.0 <= inv.a <= 1.0 and 0.0 <= inv.phi <= math.pi / 2


@given(st.lists(coord, min_size=6, max_size=6), coord)
def test_symmetry_and_u_shift(c, shift):
    g, gp = ((c[:2], c[2]), (c[3:5], c[5]))
    d = d_K(g, gp)
    assert d_K(gp, g) == d
    assert d_K((c[:2], c[2] + shift), (c[3:5], c[5] + shift)) == pytest.approx(d, rel=1e-9, abs=1e-6)


def test_matches_naive_formula_where_it_is_accurate(rng):
    for _ in range(200):
        x1, x2 = rng.normal(size=3), rng.normal(size=3)
        u1, u2 = rng.normal(2), rng.normal(2)
        assert d_K((x1, u1), (x2, u2)) == pytest.approx(naive_dK(x1, u1, x2, u2), rel=1e-10)


def test_stable_for_nearby_points_far_out():
    # the naive form loses every digit here
    x = np.array([1e4])
    d = d_K((x, 0.0), (x + 1e-6, 1e-3))
    q, s, R2 = 1e-12, 1e-3, 2e8 + 2e-2
    expected = math.sqrt(q + 4 * s * s / (math.hypot(R2, 2 * s) + R2))
    assert d == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3, 10])
def test_positivity(n, rng):
    x1, x2 = rng.normal(size=(100_000, n)), rng.normal(size=(100_000, n))
    u1, u2 = rng.normal(size=100_000), rng.normal(size=100_000)
    assert np.all(invariants_arrays(x1, u1, x2, u2)["dK"] > 0)


def test_triangle_probe_reports(rng):
    out = triangle_probe(rng, 2, 5000)
    assert out["trials"] == 5000 and 0 < out["worst_ratio"] < 10
    assert len(out["worst_triple"]) == 3
