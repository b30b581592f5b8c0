"""Continued fractions, certified fractional parts and the 1-D alpha study."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from simplexleb.irrational import (
    AlphaSpec,
    I_n,
    cf_expand,
    fractional_parts,
    liouville_dip_scan,
    study_ratio,
)


class TestAlphaSpec:
    def test_rational_is_exact(self):
        a = AlphaSpec.from_rational(415, 93)
        assert a.is_exact_rational
        assert a.rational == Fraction(415, 93)

    def test_liouville_truncation_value(self):
        a = AlphaSpec.liouville(10, 3)
        assert a.rational == Fraction(110001, 1000000)

    def test_liouville_validation(self):
        with pytest.raises(ValueError):
            AlphaSpec.liouville(1, 3)

    def test_decimal_literal(self):
        a = AlphaSpec.from_decimal("0.7071")
        assert a.rational == Fraction(7071, 10000)

    def test_describe_round_trips_grammar(self):
        assert AlphaSpec.golden().describe() == "golden"
        assert AlphaSpec.liouville(2, 4).describe() == "liouville:2,4"
        assert AlphaSpec.from_rational(1, 2).describe() == "rational:1/2"


class TestContinuedFraction:
    def test_euclidean_oracle(self):
        cf = cf_expand(AlphaSpec.from_rational(415, 93))
        assert cf.quotients == (4, 2, 6, 7)
        assert cf.exact

    def test_golden_all_ones(self):
        cf = cf_expand(AlphaSpec.golden(), max_terms=20)
        assert cf.quotients == (1,) + (1,) * 19

    def test_liouville_factorial_denominators(self):
        cf = cf_expand(AlphaSpec.liouville(10, 3))
        denominators = {q for _, q in cf.convergents}
        assert {100, 10**6} <= denominators

    def test_determinant_identity(self):
        for spec in (AlphaSpec.from_rational(415, 93), AlphaSpec.golden(),
                     AlphaSpec.liouville(2, 4)):
            assert cf_expand(spec, max_terms=20).determinant_identity_holds()

    def test_denominators_increase(self):
        cf = cf_expand(AlphaSpec.golden(), max_terms=25)
        qs = [q for _, q in cf.convergents]
        assert all(a < b for a, b in zip(qs[1:], qs[2:]))

    def test_convergent_approximation_quality(self):
        cf = cf_expand(AlphaSpec.golden(), max_terms=20)
        alpha = (1 + math.sqrt(5)) / 2
        pq = cf.convergents
        for (p, q), (_, q_next) in zip(pq[1:], pq[2:]):
            assert abs(alpha - p / q) < 1.0 / (q * q_next)


class TestFractionalParts:
    def test_rational_exact_values(self):
        got = fractional_parts(AlphaSpec.from_rational(1, 2), 4)
        np.testing.assert_array_equal(got, [0.0, 0.5, 0.0, 0.5, 0.0])

    def test_certified_against_recomputation(self):
        a = AlphaSpec.golden()
        got = fractional_parts(a, 500)
        with mpmath.workprec(512):
            phi = (1 + mpmath.sqrt(5)) / 2
            for k in (1, 7, 123, 499, 500):
                exact = mpmath.frac(phi * k)
                assert abs(got[k] - float(exact)) <= 2.0**-40

    def test_values_in_unit_interval(self):
        got = fractional_parts(AlphaSpec.liouville(2, 4), 200)
        assert np.all((got >= 0.0) & (got < 1.0))

    def test_rejects_negative_n(self):
        with pytest.raises(ValueError):
            fractional_parts(AlphaSpec.golden(), -1)


class TestIn:
    def test_integer_alpha_vanishes(self):
        assert I_n(AlphaSpec.from_rational(3, 1), 16).value == 0.0

    def test_half_n4_closed_form(self):
        # weights 0, .5, 0, .5, 0 give kernel 0.5(e^{ix} + e^{3ix}), whose
        # modulus is |cos x|; the integral is exactly 4
        got = I_n(AlphaSpec.from_rational(1, 2), 4, tol=1e-7, rho=2048.0)
        assert got.value == pytest.approx(4.0, abs=1e-6)

    def test_golden_brute_force_oracle(self):
        n = 64
        w = fractional_parts(AlphaSpec.golden(), n)
        xs = np.linspace(-math.pi, math.pi, 200001)[:-1]
        vals = np.abs(np.exp(1j * np.outer(xs, np.arange(n + 1))) @ w)
        oracle = vals.mean() * 2 * math.pi
        got = I_n(AlphaSpec.golden(), n).value
        assert got == pytest.approx(oracle, rel=1e-4)

    def test_shift_by_one_invariance(self):
        a = AlphaSpec.from_rational(5, 7)
        b = AlphaSpec.from_rational(12, 7)
        assert I_n(a, 32).value == pytest.approx(I_n(b, 32).value, rel=1e-12)


class TestStudyRatio:
    def test_single_entry_grid(self):
        recs = study_ratio(AlphaSpec.golden(), [64])
        assert len(recs) == 1
        assert recs[0].running_min == recs[0].running_max == recs[0].ratio

    def test_requires_increasing_grid(self):
        with pytest.raises(ValueError):
            study_ratio(AlphaSpec.golden(), [64, 32])

    def test_requires_floor_16(self):
        with pytest.raises(ValueError):
            study_ratio(AlphaSpec.golden(), [8, 64])

    def test_rational_ratio_decays(self):
        recs = study_ratio(AlphaSpec.from_rational(415, 93),
                           [2**e for e in range(6, 12)])
        ratios = [r.ratio for r in recs]
        assert ratios[-1] < ratios[0]

    def test_convergent_denominators_flagged(self):
        recs = study_ratio(AlphaSpec.liouville(2, 4), [47, 64, 100])
        flags = {r.n: r.is_convergent_denominator for r in recs}
        assert flags[47] and flags[64] and not flags[100]


class TestLiouvilleDipScan:
    def test_rational_has_no_dips(self):
        report = liouville_dip_scan(AlphaSpec.from_rational(415, 93))
        assert report.dips == ()

    def test_dip_report_structure(self):
        report = liouville_dip_scan(AlphaSpec.liouville(2, 4), n_max=256,
                                    generic_points=5)
        assert all(q >= 16 for q, _, _ in report.dips)
        assert math.isfinite(report.generic_median)
