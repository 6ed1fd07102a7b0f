import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dampwave.errors import InsufficientData, InvalidArgument, ResourceLimit
from dampwave.gaps import (
    RationalRatio,
    convergents,
    fit_gamma1,
    gap_quotient,
    gap_quotients,
    irrational_gap_witness,
    lattice_values,
    multi_d_gap_bound,
    rational_gap_bound,
    roth_gap_check,
)
from dampwave.spectral import Domain1D, RectangleDomain, build_spectrum_1d_constant, build_spectrum_rectangle

from oracles import min_mu_gap

PI = math.pi
SQRT2_BOX = RectangleDomain((PI, PI / 2**0.25))


def sqrt2():
    return mpmath.sqrt(2)


class TestQuotient:
    def test_squares(self):
        s = build_spectrum_1d_constant(Domain1D(PI), 10)
        assert gap_quotient(s, 2, exact=True) == Fraction(32, 15)
        assert gap_quotient(s, 1, exact=True) == Fraction(4, 3)

    def test_square_entry(self):
        s = build_spectrum_rectangle(RectangleDomain((PI, PI)), 20)
        k = list(s.eigenvalues).index(8.0) + 1
        assert gap_quotient(s, k, exact=True) == Fraction(5, 3) + 5
        assert gap_quotient(s, k) == pytest.approx(6.6667, abs=1e-4)

    def test_range(self):
        s = build_spectrum_1d_constant(Domain1D(PI), 10)
        for k in (0, 10):
            with pytest.raises(InvalidArgument):
                gap_quotient(s, k)

    def test_float_path_agrees(self):
        s = build_spectrum_rectangle(SQRT2_BOX, 500)
        q = gap_quotients(s)
        assert q[4] == pytest.approx(gap_quotient(s, 5), rel=1e-14)

    @given(st.integers(1, 5), st.integers(1, 5))
    def test_exact_arithmetic(self, p, q):
        # L2 = pi sqrt(q/p) gives mu = n1^2 + (p/q) n2^2
        s = build_spectrum_rectangle(RectangleDomain((PI, PI * math.sqrt(q / p))), 300)
        v = [Fraction(0)] + s.exact_values()
        for k in range(1, min(len(s) - 1, 30)):
            want = v[k - 1] / (v[k] - v[k - 1]) + v[k + 1] / (v[k + 1] - v[k])
            assert gap_quotient(s, k, exact=True) == want


class TestGamma1:
    def test_squares(self):
        r = fit_gamma1(build_spectrum_1d_constant(Domain1D(PI), 200))
        assert r.gamma1 == pytest.approx(0.5, abs=0.05)
        assert r.lambda_star == 0.25 and r.lambda_star_k == 1
        assert np.all(r.quotient <= r.bound() * (1 + 1e-12))

    def test_square_domain(self):
        r = fit_gamma1(build_spectrum_rectangle(RectangleDomain((PI, PI)), 10_000))
        assert r.gamma1 <= 1.05
        assert np.all(r.quotient <= r.bound() * (1 + 1e-12))

    def test_needs_data(self):
        with pytest.raises(InsufficientData):
            fit_gamma1(build_spectrum_1d_constant(Domain1D(PI), 10))

    def test_never_negative(self):
        # geometric spectrum: quotients decrease, exponent is clamped
        from dampwave.spectral import SpectralEntry, Spectrum

        entries = tuple(SpectralEntry(k + 1, 2.0**k, ()) for k in range(40))
        r = fit_gamma1(Spectrum(entries, "test", Domain1D(PI)))
        assert r.gamma1 >= 0
        assert np.all(r.quotient <= r.bound() * (1 + 1e-12))


class TestRational:
    @pytest.mark.parametrize("xi, bound, attained", [
        (Fraction(1), Fraction(1), Fraction(1)),
        (Fraction(3, 2), Fraction(1, 2), Fraction(1, 2)),
        (Fraction(2), Fraction(1), Fraction(1)),
    ])
    def test_examples(self, xi, bound, attained):
        b = rational_gap_bound(RationalRatio.from_fraction(xi), 50)
        assert b.bound == bound and b.attained == attained
        assert b.attained == min_mu_gap(xi.numerator, xi.denominator, 50)

    def test_eleven_and_twelve(self):
        vals = set(lattice_values(RationalRatio(2, 1), 50).tolist())
        assert {11, 12} <= vals

    @given(st.integers(1, 30), st.integers(1, 30))
    def test_lower_bound(self, p, q):
        if math.gcd(p, q) != 1:
            return
        b = rational_gap_bound(RationalRatio(p, q), 40)
        assert b.attained >= b.bound

    def test_validation(self):
        with pytest.raises(InvalidArgument):
            RationalRatio(2, 4)
        with pytest.raises(InvalidArgument):
            RationalRatio(0, 1)
        with pytest.raises(InvalidArgument):
            rational_gap_bound(RationalRatio(1, 1), 3)

    def test_overflow(self):
        with pytest.raises(ResourceLimit):
            rational_gap_bound(RationalRatio(2**40, 1), 2**12)

    @pytest.mark.parametrize("ratios, want", [
        ([Fraction(1, 2), Fraction(1, 3)], Fraction(1, 6)),
        ([Fraction(1), Fraction(1)], Fraction(1)),
        ([Fraction(3, 4), Fraction(5, 6)], Fraction(1, 12)),
    ])
    def test_lcm(self, ratios, want):
        assert multi_d_gap_bound([RationalRatio.from_fraction(r) for r in ratios]) == want

    def test_lcm_against_lattice(self):
        # 3D box with squared ratios 1/2 and 1/3: brute-force gaps stay above 1/6
        vals = sorted({6 * a * a + 3 * b * b + 2 * c * c for a in range(1, 25) for b in range(1, 25)
                       for c in range(1, 25)})
        assert Fraction(min(np.diff(vals)), 6) >= Fraction(1, 6)

    def test_lcm_needs_two(self):
        with pytest.raises(InvalidArgument):
            multi_d_gap_bound([RationalRatio(1, 2)])

    def test_lcm_overflow(self):
        big = [RationalRatio(1, 2**40 + 1), RationalRatio(1, 2**40 - 1)]
        with pytest.raises(ResourceLimit):
            multi_d_gap_bound(big)


class TestWitness:
    def test_convergents(self):
        assert convergents(sqrt2, depth=6) == [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70)]

    def test_sqrt2_two(self):
        w = irrational_gap_witness(sqrt2, 2.0)
        assert (w.k, w.j, w.n, w.m) == (3, 2, (7, 3), (5, 5))
        assert w.gap == pytest.approx(8 * (3 - 2 * math.sqrt(2)))

    def test_sqrt2_tenth(self):
        w = irrational_gap_witness(sqrt2, 0.1)
        assert (w.k, w.j, w.n, w.m) == (99, 70, (199, 139), (197, 141))
        assert w.gap == pytest.approx(0.0404, abs=1e-4)

    def test_golden(self):
        w = irrational_gap_witness(lambda: (1 + mpmath.sqrt(5)) / 2, 0.5)
        assert 0 < w.gap < 0.5
        fib = [1, 1, 2, 3, 5, 8, 13, 21, 34]
        assert w.k in fib and w.j in fib

    def test_below_side(self):
        w = irrational_gap_witness(sqrt2, 0.5, side="below")
        assert w.k / w.j < math.sqrt(2)
        assert 0 < w.gap < 0.5

    @given(st.integers(2, 50).filter(lambda n: math.isqrt(n) ** 2 != n), st.floats(1e-3, 1.0))
    def test_gap_in_range(self, n, eps):
        w = irrational_gap_witness(lambda: mpmath.sqrt(n), eps, side="any")
        with mpmath.workdps(80):
            x = mpmath.sqrt(n)
            gap = (w.n[0] ** 2 + x * w.n[1] ** 2) - (w.m[0] ** 2 + x * w.m[1] ** 2)
            assert 0 < gap < eps

    def test_epsilon_validation(self):
        with pytest.raises(InvalidArgument):
            irrational_gap_witness(sqrt2, 0.0)

    def test_depth_budget(self):
        with pytest.raises(ResourceLimit):
            irrational_gap_witness(sqrt2, 1e-30, depth=5)

    def test_precision_restored(self):
        before = mpmath.mp.dps
        irrational_gap_witness(sqrt2, 0.01)
        assert mpmath.mp.dps == before


class TestRoth:
    def test_sqrt2_positive(self):
        r = roth_gap_check(build_spectrum_rectangle(SQRT2_BOX, 10_000), 0.1)
        assert r.c0_empirical > 0 and r.flag == "ok"

    def test_non_increasing_in_cap(self):
        c = [roth_gap_check(build_spectrum_rectangle(SQRT2_BOX, cap), 0.1).c0_empirical
             for cap in (2500, 5000, 10_000)]
        assert c[0] >= c[1] >= c[2] > 0

    def test_rational(self):
        dom = RectangleDomain((PI, PI * math.sqrt(2 / 3)))
        r = roth_gap_check(build_spectrum_rectangle(dom, 500), 0.1)
        assert r.c0_empirical == math.inf
        assert r.flag == "rational: Roth check inapplicable"
        assert r.min_gap >= r.rational_bound * (1 - 1e-12)
        assert r.rational_bound == pytest.approx(0.5)

    def test_single_entry(self):
        s = build_spectrum_rectangle(SQRT2_BOX, 4.0)
        with pytest.raises(InsufficientData):
            roth_gap_check(s, 0.1)
