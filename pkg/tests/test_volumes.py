import math

import numpy as np
import pytest
from scipy import integrate, optimize

from grushin.errors import DimensionMismatch, DomainError, NonpositiveScale
from grushin.geometry import Point, invariants_arrays
from grushin.numerics import log_beta, log_sphere_area
from grushin.volumes import (
    BallSpec, J_lower_ratio, Metric, check_EF1, envelope, in_ball, in_BK_closed_form, sample_ball,
    theta0, theta0_residual, volume_BCC_exact, volume_BK_exact, volume_bounds, volume_monte_carlo,
    volume_row,
)


def bk_oracle_2d(xnorm):
    """Cartesian dblquad over the unit disk (independent of the radial reduction)."""
    f = lambda z2, z1: math.sqrt(max(0.0, 1 - z1 * z1 - z2 * z2)) * math.sqrt(1 + (2 * xnorm - z1) ** 2 + z2 * z2)
    val, _ = integrate.dblquad(f, -1, 1, lambda z1: -math.sqrt(1 - z1 * z1), lambda z1: math.sqrt(1 - z1 * z1),
                               epsabs=1e-12, epsrel=1e-11)
    return val


class TestMembership:
    def test_center(self):
        g = Point([0.4, -0.1], 2.0)
        for m in Metric:
            assert in_ball(BallSpec(m, g, 0.5), (np.array([g.x]), np.array([g.u])))[0]

    def test_outside_euclidean_slab(self):
        spec = BallSpec("K", Point([0.2], 1.0), 1.0)
        assert not in_ball(spec, (np.array([[1.2], [-0.8]]), np.array([1.0, 1.0]))).any()

    def test_closed_form_agrees(self, rng):
        for n in (1, 2, 4):
            c = Point(rng.normal(size=n), rng.normal())
            x = c.xa + rng.uniform(-1.2, 1.2, size=(10_000, n))
            u = c.u + rng.uniform(-3, 3, size=10_000)
            assert np.array_equal(in_ball(BallSpec("K", c, 1.0), (x, u)), in_BK_closed_form(c, (x, u)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            in_ball(BallSpec("K", Point([0.0], 0.0), 1.0), (np.zeros((3, 2)), np.zeros(3)))

    def test_radius_positive(self):
        with pytest.raises(NonpositiveScale):
            BallSpec("K", Point([0.0], 0.0), 0.0)

    @pytest.mark.parametrize("xnorm,r", [(0.0, 1.0), (2.0, 0.5), (0.7, 3.0)])
    def test_envelope_contains_both_balls(self, xnorm, r, rng):
        n = 2
        c = Point([xnorm, 0.0], 0.3)
        half, _ = envelope(xnorm, n, r)
        x = c.xa + rng.uniform(-1.5 * r, 1.5 * r, size=(50_000, n))
        u = c.u + rng.uniform(-2 * half, 2 * half, size=50_000)
        inside_env = (np.linalg.norm(x - c.xa, axis=1) < r) & (np.abs(u - c.u) < half)
        for m in Metric:
            hit = in_ball(BallSpec(m, c, r), (x, u))
            assert hit.any() and not np.any(hit & ~inside_env)


class TestBK:
    def test_one_dimensional_origin(self):
        ref, _ = integrate.quad(lambda t: math.sqrt(1 - t * t) * math.sqrt(1 + t * t), 0, 1, epsabs=1e-13)
        assert volume_BK_exact(0.0, 1).value == pytest.approx(2 * ref, rel=1e-10)

    @pytest.mark.parametrize("xnorm", [0.0, 0.3, 1.7])
    def test_two_dimensional_cartesian_oracle(self, xnorm):
        assert volume_BK_exact(xnorm, 2).value == pytest.approx(bk_oracle_2d(xnorm), rel=1e-8)

    def test_one_dimensional_offset(self):
        x = 0.8
        f = lambda z: math.sqrt(1 - z * z) * math.sqrt(1 + (2 * x - z) ** 2)
        ref, _ = integrate.quad(f, -1, 1, epsabs=1e-13, limit=200)
        assert volume_BK_exact(x, 1).value == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
    @pytest.mark.parametrize("xnorm", [0.0, 0.5, 2.0, 10.0])
    @pytest.mark.parametrize("r", [0.5, 1.0, 3.1])
    def test_bracket(self, n, xnorm, r):
        lo, hi = volume_bounds(xnorm, n, r)
        v = volume_BK_exact(xnorm, n, r).value
        assert lo * (1 - 1e-6) <= v <= hi * (1 + 1e-6)

    @pytest.mark.parametrize("n", [1, 3, 6])
    @pytest.mark.parametrize("r", [0.7, 2.0, 3.1])
    def test_dilation(self, n, r):
        a = volume_BK_exact(1.3, n, r, method="dilation").value
        b = volume_BK_exact(1.3, n, r, method="direct").value
        assert a == pytest.approx(b, rel=1e-8)
        assert a == pytest.approx(r ** (n + 2) * volume_BK_exact(1.3 / r, n, 1.0).value, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_monotone_in_x(self, n):
        v = [volume_BK_exact(x, n).value for x in np.linspace(0, 5, 21)]
        assert np.all(np.diff(v) >= 0)

    def test_origin_formula(self):
        for n in (2, 4):
            v = volume_BK_exact(0.0, n).value
            ub = math.exp(log_beta(n / 2, 1.5) + log_sphere_area(n))
            assert ub / 8 <= v <= ub

    def test_errors(self):
        with pytest.raises(DomainError):
            volume_BK_exact(0.0, 0)
        with pytest.raises(NonpositiveScale):
            volume_BK_exact(0.0, 1, r=-1.0)
        with pytest.raises(DomainError):
            volume_BK_exact(0.0, 1, method="other")


class TestTheta0:
    @pytest.mark.parametrize("zn", [0.05, 0.4, 0.9, 0.999])
    def test_origin_is_inverse_sinc(self, zn):
        ref = optimize.brentq(lambda t: np.sinc(t / math.pi) - zn, 1e-12, math.pi, xtol=1e-15)
        assert theta0(0.0, 0.0, zn) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("xn", [0.1, 0.5, 1.0, 3.0])
    def test_zero_z_bisection(self, xn):
        f = lambda t: 2 * xn * xn * (1 - math.cos(t)) - (math.sin(t) / t) ** 2
        lo, hi = 1e-12, math.pi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
        assert theta0(xn, 0.0, 0.0) == pytest.approx(0.5 * (lo + hi), rel=1e-10)

    def test_edge_limit(self):
        xn = 0.6
        zn = 1 - 1e-6
        assert theta0(xn, -0.5 * xn * zn, zn) < 0.05

    def test_residual(self, rng):
        xn = 10 ** rng.uniform(-2, 1, 5000)
        zn = np.sqrt(rng.uniform(0, 1, 5000)) * 0.999999
        zx = xn * zn * rng.uniform(-1, 1, 5000)
        th = theta0(xn, zx, zn)
        assert np.max(np.abs(theta0_residual(xn, zx, zn, th))) < 1e-10
        assert np.all((th >= 0) & (th < math.pi))

    def test_domain(self):
        with pytest.raises(DomainError):
            theta0(0.5, 0.0, 1.0)


class TestBCC:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
    @pytest.mark.parametrize("xnorm", [0.0, 0.5, 1.0, 2.0, 5.0])
    def test_between_fraction_and_BK(self, n, xnorm):
        frac = volume_BCC_exact(xnorm, n).value / volume_BK_exact(xnorm, n).value
        assert 0.25 <= frac <= 1.0 + 1e-8

    @pytest.mark.parametrize("n,xnorm", [(2, 0.5), (3, 0.0)])
    def test_monte_carlo(self, n, xnorm):
        x = np.zeros(n)
        x[0] = xnorm
        mc = volume_monte_carlo(BallSpec("CC", Point(x, 0.0), 1.0), 300_000, seed=11, jobs=2)
        exact = volume_BCC_exact(xnorm, n).value
        assert abs(mc.value - exact) <= 3 * mc.error
        assert mc.extra["cc_outside_k"] == 0

    def test_u_invariance(self, rng):
        x = np.array([0.9, 0.0])
        a = volume_monte_carlo(BallSpec("CC", Point(x, 0.0), 1.0), 100_000, seed=4)
        b = volume_monte_carlo(BallSpec("CC", Point(x, 123.0), 1.0), 100_000, seed=4)
        assert a.value == b.value

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_J_lower_bound_positive(self, n):
        assert J_lower_ratio(np.random.default_rng(n), n, 20_000)["min_ratio"] > 0.1


class TestMonteCarlo:
    def test_matches_exact(self):
        mc = volume_monte_carlo(BallSpec("K", Point([0.0], 0.0), 1.0), 1_000_000, seed=7)
        assert abs(mc.value - volume_BK_exact(0.0, 1).value) <= 3 * mc.error
        assert mc.seed == 7 and mc.samples == 1_000_000

    def test_independent_of_jobs(self):
        spec = BallSpec("K", Point([0.3, 0.2], 0.0), 1.5)
        a = volume_monte_carlo(spec, 300_000, seed=2, jobs=1)
        b = volume_monte_carlo(spec, 300_000, seed=2, jobs=4)
        assert a.value == b.value and a.error == b.error

    def test_needs_samples(self):
        with pytest.raises(DomainError):
            volume_monte_carlo(BallSpec("K", Point([0.0], 0.0), 1.0), 0, seed=0)

    def test_sample_ball_inside(self):
        spec = BallSpec("CC", Point([1.0, -0.5], 0.2), 0.8)
        xs, us = sample_ball(spec, 500, seed=3)
        assert xs.shape == (500, 2) and np.all(in_ball(spec, (xs, us)))

    def test_row_schema(self):
        est = volume_BK_exact(0.0, 1)
        row = volume_row("K", 1, 0.0, 1.0, est)
        assert list(row) == ["metric", "n", "|x|", "r", "method", "value", "error", "samples", "seed"]


class TestEF1:
    @pytest.mark.parametrize("n", [1, 3, 10, 30])
    def test_bounded_below(self, n):
        assert check_EF1(Point(np.zeros(n), 0.0), samples=400) > 0.01

    def test_offset_center(self):
        x = np.zeros(5)
        x[0] = 2.0
        assert check_EF1(Point(x, 0.0), samples=400) > 0.01

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            check_EF1(Point([0.0, 0.0], 0.0), n=3)
