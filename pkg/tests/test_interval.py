from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apsis.errors import IntervalDomainError
from apsis.interval import (
    WIDEN_ULPS,
    Interval,
    from_fraction,
    hull,
    iv_add,
    iv_div,
    iv_exp,
    iv_ln,
    iv_mul,
    iv_poly,
    iv_pow_int,
    iv_sqrt,
    iv_sub,
)

N_FUZZ = 100_000


def _random_intervals(rng, n, lo=-10.0, hi=10.0):
    a = rng.uniform(lo, hi, n)
    w = rng.exponential(0.5, n) * rng.choice([0.0, 1e-12, 1.0], n)
    return Interval(a, a + w)


def _point_in(rng, x: Interval):
    t = rng.uniform(0, 1, x.shape)
    p = x.lo + t * (x.hi - x.lo)
    return np.clip(p, x.lo, x.hi)


def _encloses(res: Interval, exact) -> bool:
    """Every exact value (Fraction or mpf) lies in its float interval."""
    for lo, hi, v in zip(res.lo.ravel(), res.hi.ravel(), exact):
        if not (Fraction(float(lo)) <= v <= Fraction(float(hi))):
            return False
    return True


def _encloses_mp(res: Interval, exact) -> bool:
    for lo, hi, v in zip(res.lo.ravel(), res.hi.ravel(), exact):
        if not (mp.mpf(float(lo)) <= v <= mp.mpf(float(hi))):
            return False
    return True


class TestBasics:
    def test_mul_example(self):
        r = Interval(1, 2) * Interval(-3, 4)
        assert r.lo <= -6 and r.hi >= 8
        assert r.lo > -6 - 1e-13 and r.hi < 8 + 1e-13

    def test_ln_one(self):
        r = iv_ln(Interval(1.0, 1.0))
        assert r.lo <= 0 <= r.hi and r.width < 1e-300

    def test_rejects_nan_and_reversed(self):
        with pytest.raises(IntervalDomainError):
            Interval(float("nan"), 1.0)
        with pytest.raises(IntervalDomainError):
            Interval(2.0, 1.0)

    def test_domain_errors(self):
        with pytest.raises(IntervalDomainError):
            iv_div(Interval(1, 2), Interval(-1, 1))
        with pytest.raises(IntervalDomainError):
            iv_ln(Interval(0.0, 1.0))
        with pytest.raises(IntervalDomainError):
            iv_sqrt(Interval(-1e-3, 1.0))
        with pytest.raises(IntervalDomainError):
            iv_pow_int(Interval(1, 2), -1)

    def test_widening_is_small(self):
        r = Interval(1.0) + Interval(2.0)
        assert r.lo == 3.0 - WIDEN_ULPS * np.spacing(3.0)
        assert r.hi == 3.0 + WIDEN_ULPS * np.spacing(3.0)

    def test_from_fraction_tight(self):
        f = Fraction(1, 3)
        r = from_fraction(f)
        assert Fraction(float(r.lo)) < f < Fraction(float(r.hi))
        assert np.nextafter(float(r.lo), 1.0) == r.hi
        assert from_fraction(Fraction(1, 4)).width == 0

    def test_even_power_straddling_zero(self):
        r = iv_pow_int(Interval(-2.0, 1.0), 2)
        assert r.lo == 0 and 4 <= r.hi < 4 + 1e-13

    def test_hull_and_getitem(self):
        x = Interval(np.array([0.0, 1.0]), np.array([0.5, 3.0]))
        h = hull(x)
        assert h.lo == 0 and h.hi == 3
        assert x[1].lo == 1 and x[1].hi == 3

    def test_operators_accept_scalars(self):
        x = Interval(1.0, 2.0)
        for r in (x + 1, 1 + x, x - 1, 1 - x, 2 * x, x / 2, 2 / x, -x, x ** 3):
            assert isinstance(r, Interval)

    def test_poly_exact_coefficients(self):
        r = iv_poly([Fraction(1, 3), Fraction(-2, 3)], Interval(0.5))
        assert r.lo <= 0 <= r.hi


class TestEnclosureFuzz:
    """Exact image of random points of the operands must lie in the result."""

    @pytest.mark.parametrize("op,exact", [
        (iv_add, lambda a, b: a + b),
        (iv_sub, lambda a, b: a - b),
        (iv_mul, lambda a, b: a * b),
    ])
    def test_binary(self, op, exact):
        rng = np.random.default_rng(hash(op.__name__) % 2 ** 32)
        x, y = _random_intervals(rng, N_FUZZ), _random_intervals(rng, N_FUZZ)
        px, py = _point_in(rng, x), _point_in(rng, y)
        res = op(x, y)
        vals = [exact(Fraction(a), Fraction(b)) for a, b in zip(px, py)]
        assert _encloses(res, vals)

    def test_div(self):
        rng = np.random.default_rng(17)
        x = _random_intervals(rng, N_FUZZ)
        y = _random_intervals(rng, N_FUZZ, 0.01, 10.0)
        sign = rng.choice([-1.0, 1.0], N_FUZZ)
        y = Interval(np.where(sign > 0, y.lo, -y.hi), np.where(sign > 0, y.hi, -y.lo))
        px, py = _point_in(rng, x), _point_in(rng, y)
        res = iv_div(x, y)
        assert _encloses(res, [Fraction(a) / Fraction(b) for a, b in zip(px, py)])

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_pow(self, n):
        rng = np.random.default_rng(n)
        x = _random_intervals(rng, N_FUZZ // 4, -3.0, 3.0)
        px = _point_in(rng, x)
        res = iv_pow_int(x, n)
        assert _encloses(res, [Fraction(a) ** n for a in px])

    def test_sqrt(self):
        rng = np.random.default_rng(21)
        x = _random_intervals(rng, N_FUZZ, 0.0, 100.0)
        px = _point_in(rng, x)
        res = iv_sqrt(x)
        mp.mp.dps = 40
        assert _encloses_mp(res, [mp.sqrt(mp.mpf(float(a))) for a in px])

    def test_ln(self):
        rng = np.random.default_rng(22)
        a = np.exp(rng.uniform(-30, 30, N_FUZZ))
        x = Interval(a, a * (1 + rng.choice([0.0, 1e-9, 0.5], N_FUZZ)))
        px = _point_in(rng, x)
        res = iv_ln(x)
        mp.mp.dps = 40
        assert _encloses_mp(res, [mp.log(mp.mpf(float(v))) for v in px])

    def test_ln_near_one(self):
        # log has its worst relative conditioning around 1
        rng = np.random.default_rng(23)
        a = 1 + rng.uniform(-1e-3, 1e-3, N_FUZZ)
        x = Interval(a)
        res = iv_ln(x)
        mp.mp.dps = 40
        assert _encloses_mp(res, [mp.log(mp.mpf(float(v))) for v in a])

    def test_exp(self):
        rng = np.random.default_rng(24)
        x = _random_intervals(rng, N_FUZZ, -50.0, 50.0)
        px = _point_in(rng, x)
        res = iv_exp(x)
        mp.mp.dps = 40
        assert _encloses_mp(res, [mp.exp(mp.mpf(float(v))) for v in px])

    def test_poly_brute_force(self):
        # triple-width sampling: every sample of the polynomial lies inside
        rng = np.random.default_rng(25)
        coeffs = [Fraction(1, 3), Fraction(-7, 5), Fraction(2, 9), Fraction(5, 2)]
        for _ in range(200):
            c = rng.uniform(-2, 2)
            w = rng.uniform(0, 0.3)
            x = Interval(c - w, c + w)
            res = iv_poly(coeffs, x)
            for t in np.linspace(c - w, c + w, 3 * 7):
                t = Fraction(t)
                v = sum(ck * t ** k for k, ck in enumerate(coeffs))
                assert Fraction(float(res.lo)) <= v <= Fraction(float(res.hi))


class TestMeasuredUlpError:
    def test_numpy_log_exp_within_one_ulp(self):
        # justification of the widening factor: numpy's log/exp are sub-ulp accurate here
        rng = np.random.default_rng(26)
        xs = np.exp(rng.uniform(-20, 20, 20000))
        mp.mp.dps = 40
        worst = 0.0
        for x, lx, ex in zip(xs, np.log(xs), np.exp(np.log(xs))):
            ref = mp.log(mp.mpf(float(x)))
            worst = max(worst, float(abs(mp.mpf(float(lx)) - ref)) / float(np.spacing(abs(lx))))
        assert worst < 1.0 < WIDEN_ULPS


@given(st.floats(-1e6, 1e6), st.floats(0, 1e3), st.floats(-1e6, 1e6), st.floats(0, 1e3))
def test_lo_le_hi_preserved(a, wa, b, wb):
    x, y = Interval(a, a + wa), Interval(b, b + wb)
    for r in (x + y, x - y, x * y, iv_pow_int(x, 3), iv_exp(Interval(min(a, 700), min(a, 700) + min(wa, 1)))):
        assert np.all(r.lo <= r.hi)
