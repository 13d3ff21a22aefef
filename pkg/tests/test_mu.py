import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from grushin.errors import DomainError, OutOfRange
from grushin.geometry import Point, invariants_arrays
from grushin.mu import d_CC, d_CC_arrays, mu, mu_inverse, mu_prime

HALF_PI = math.pi / 2


def mu_oracle(a, phi):
    """Direct, unsplit formula at 50 digits."""
    with mpmath.workdps(50):
        a, phi = mpmath.mpf(a), mpmath.mpf(phi)
        s = mpmath.sin(phi)
        return phi / s ** 2 - mpmath.cot(phi) + a * (1 - phi * mpmath.cot(phi)) / s


def dcc_oracle(x1, u1, x2, u2):
    """Geodesic parameter by mpmath root finding, then the closed form."""
    with mpmath.workdps(40):
        x1 = [mpmath.mpf(v) for v in x1]
        x2 = [mpmath.mpf(v) for v in x2]
        R2 = sum(v * v for v in x1) + sum(v * v for v in x2)
        a = 2 * sum(p * q for p, q in zip(x1, x2)) / R2
        s = abs(mpmath.mpf(u1) - mpmath.mpf(u2))
        if s == 0:
            return float(mpmath.sqrt(sum((p - q) ** 2 for p, q in zip(x1, x2))))
        target = 2 * s / R2
        lo, hi = mpmath.mpf("1e-30"), mpmath.pi - mpmath.mpf("1e-30")
        for _ in range(150):
            mid = (lo + hi) / 2
            if mu_oracle(a, mid) < target:
                lo = mid
            else:
                hi = mid
        th = (lo + hi) / 2
        return float(mpmath.sqrt((th / mpmath.sin(th)) ** 2 * R2 * (1 - a * mpmath.cos(th))))


class TestMu:
    def test_zero(self):
        assert np.all(np.asarray(mu(np.linspace(-1, 1, 11), 0.0)) == 0.0)

    def test_half_pi(self):
        assert mu(1.0, HALF_PI) == pytest.approx(HALF_PI + 1.0, rel=1e-15)

    @pytest.mark.parametrize("a", [-1.0, -0.3, 0.0, 0.8, 1.0])
    def test_small_phi_slope(self, a):
        assert mu(a, 1e-4) / 1e-4 == pytest.approx((2 + a) / 3, abs=1e-6)
        assert mu_prime(a, 0.0) == pytest.approx((2 + a) / 3, rel=1e-14)

    @given(st.floats(-1, 1), st.floats(1e-3, math.pi - 1e-3))
    def test_against_mpmath(self, a, phi):
        assert mu(a, phi) == pytest.approx(float(mu_oracle(a, phi)), rel=1e-11)

    @given(st.floats(-1, 1), st.floats(-3.1, 3.1))
    def test_odd(self, a, phi):
        assert mu(a, -phi) == -mu(a, phi)
        assert mu_prime(a, -phi) == mu_prime(a, phi)

    @pytest.mark.parametrize("a", [-1.0, -0.5, 0.0, 0.5, 1.0])
    def test_derivative_fd(self, a):
        phi = np.linspace(0.05, math.pi - 0.05, 60)
        h = 1e-6
        fd = (np.asarray(mu(a, phi + h)) - np.asarray(mu(a, phi - h))) / (2 * h)
        assert np.allclose(mu_prime(a, phi), fd, rtol=1e-6)

    def test_monotone(self):
        phi = np.linspace(0.0, math.pi - 1e-3, 2000, endpoint=False)[1:]
        for a in np.linspace(-1, 1, 21):
            assert np.all(np.diff(mu(a, phi)) > 0)
        assert np.all(np.asarray(mu_prime(-1.0, np.linspace(1e-3, math.pi - 0.01, 500))) > 0)

    def test_range_at_minus_one(self):
        v = np.asarray(mu(-1.0, np.linspace(0, math.pi - 1e-6, 2000)))
        assert v.max() <= HALF_PI

    def test_domain(self):
        with pytest.raises(DomainError):
            mu(0.0, math.pi)
        with pytest.raises(DomainError):
            mu(1.5, 0.1)


class TestInverse:
    def test_special_values(self):
        assert mu_inverse(0.3, 0.0) == 0.0
        assert mu_inverse(1.0, HALF_PI + 1.0) == pytest.approx(HALF_PI, rel=1e-13)

    def test_round_trip(self, rng):
        a = rng.uniform(-1, 1, 10_000)
        m = rng.uniform(-20, 20, 10_000)
        a = np.where((a < -0.99) & (np.abs(m) >= HALF_PI), -0.99, a)
        phi = mu_inverse(a, m)
        assert np.all(np.sign(phi) == np.sign(m))
        assert np.max(np.abs(np.asarray(mu(a, phi)) - m) / np.maximum(1, np.abs(m))) < 1e-9

    @pytest.mark.parametrize("m", [HALF_PI, -HALF_PI, 3.0])
    def test_out_of_range(self, m):
        with pytest.raises(OutOfRange):
            mu_inverse(-1.0, m)

    def test_just_inside(self):
        m = HALF_PI * (1 - 1e-10)
        assert mu(-1.0, mu_inverse(-1.0, m)) == pytest.approx(m, rel=1e-10)

    def test_bad_a(self):
        with pytest.raises(DomainError):
            mu_inverse(1.01, 0.5)


class TestDCC:
    def test_antipodal_special_case(self):
        x = np.array([0.6, -0.2])
        s = math.pi * np.dot(x, x)
        assert d_CC((x, 0.0), (-x, s)) == pytest.approx(math.sqrt(2 * math.pi * s), rel=1e-14)

    def test_euclidean_when_same_height(self):
        g, gp = Point([1.0, 2.0], 0.4), Point([-0.5, 0.3], 0.4)
        assert d_CC(g, gp) == pytest.approx(math.hypot(1.5, 1.7), rel=1e-12)

    def test_heisenberg_degenerate(self):
        assert d_CC(Point([0.0], 0.0), Point([0.0], 2.0)) == pytest.approx(math.sqrt(4 * math.pi))

    @pytest.mark.parametrize("eps", [1e-6, -1e-6])
    def test_seam(self, eps):
        x = np.array([0.7, 0.1, -0.4])
        s_star = 0.5 * math.pi * np.dot(x, x)
        here = d_CC((x, 0.0), (-x, s_star))
        there = d_CC((x, 0.0), (-x, s_star * (1 + eps)))
        assert there == pytest.approx(here, rel=1e-3)

    def test_against_mpmath_oracle(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 4))
            x1, x2 = rng.normal(size=n), rng.normal(size=n)
            u1, u2 = rng.normal(size=2) * 2
            assert d_CC((x1, u1), (x2, u2)) == pytest.approx(dcc_oracle(x1, u1, x2, u2), rel=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
    def test_dK_below_dCC(self, n, rng):
        N = 100_000
        x1, x2 = rng.normal(size=(N, n)), rng.normal(size=(N, n))
        u1, u2 = rng.normal(size=N) * 3, rng.normal(size=N) * 3
        x2[:500] = -x1[:500]
        dc = d_CC_arrays(x1, u1, x2, u2)
        dk = invariants_arrays(x1, u1, x2, u2)["dK"]
        assert np.all(dk <= dc + 1e-9)
        assert np.isfinite(np.max(dc / dk))

    @given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.sampled_from([0.5, 2.0, 10.0]))
    def test_dilation_and_symmetry(self, c, r):
        g, gp = (np.array(c[:2]), c[2]), (np.array(c[3:5]), c[5])
        d = d_CC(g, gp)
        assert d_CC(gp, g) == pytest.approx(d, rel=1e-12, abs=1e-300)
        scaled = d_CC((r * g[0], r * r * g[1]), (r * gp[0], r * r * gp[1]))
        assert scaled == pytest.approx(r * d, rel=1e-10, abs=1e-300)
