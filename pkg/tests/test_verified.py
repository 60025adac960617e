import json
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from apsis.errors import DomainError, IntervalDomainError
from apsis.interval import Interval, from_fraction
from apsis.series import e_at_one, e_at_zero, f_limit, r_poly
from apsis.verified import (
    GridReport,
    b_lower,
    b_tail_interval,
    e_one_dq_interval,
    e_one_interval,
    e_tilde_one,
    e_tilde_zero,
    e_zero_dq_interval,
    e_zero_interval,
    m_interval,
    n_interval,
    r_interval,
    rational_cells,
    verify_first_grid,
    verify_second_grid,
    verify_tail_region,
    write_certificate,
)


def _b_mp(s, q):
    """B(s, q) at 40 digits from the exact R table and log boundary forms."""
    with mp.workdps(40):
        s, q = mp.mpf(s), mp.mpf(q)
        L = mp.log(1 - q)
        e1 = 2 / q - 1 + (2 - q) / L
        e0 = 1 - 2 / q - (2 - q) / ((1 - q) * L)
        from apsis.series import r_coeff_table

        def R(x):
            return sum(mp.mpf(c.numerator) / c.denominator * x ** i * q ** j
                       for j, row in enumerate(r_coeff_table()) for i, c in enumerate(row))

        return R(s) * (1 + e1) ** 2 + R(1 - s) * (1 + e0) ** 2


class TestBoundaryEnclosures:
    def test_point_values_enclosed(self):
        for q in (0.1, 0.37, 0.9):
            qi = Interval(q)
            for fn, ref in ((e_one_interval, e_at_one(0, q)), (e_zero_interval, e_at_zero(0, q)),
                            (e_one_dq_interval, f_limit(q))):
                r = fn(qi)
                assert r.lo <= ref * (1 + 1e-13) + 1e-13 and ref * (1 - 1e-13) - 1e-13 <= r.hi

    def test_derivative_enclosures_consistent(self):
        h = 1e-6
        for q in (0.2, 0.5, 0.8):
            fd1 = (e_at_one(0, q + h) - e_at_one(0, q - h)) / (2 * h)
            fd0 = (e_at_zero(0, q + h) - e_at_zero(0, q - h)) / (2 * h)
            assert e_one_dq_interval(Interval(q)).mid == pytest.approx(fd1, abs=1e-6)
            assert e_zero_dq_interval(Interval(q)).mid == pytest.approx(fd0, abs=1e-6)

    def test_r_interval_exact_point(self):
        s, q = Fraction(1, 4), Fraction(1, 2)
        r = r_interval(from_fraction(s), from_fraction(q))
        v = r_poly(s, q)
        assert Fraction(float(r.lo)) <= v <= Fraction(float(r.hi))


class TestTailRegion:
    def test_replay(self):
        rep = verify_tail_region()
        assert rep.passed
        F = rep.details["F_0.9"]
        assert 0.0394 <= F[0] and F[1] <= 0.040
        assert rep.details["B_0.91"][1] < -0.04
        assert rep.details["N_max_hi_on_0.9_0.91"] < -0.2
        assert rep.details["F_positive_on_[0.9,1)"]
        assert rep.elapsed_ms < 1000

    def test_f_value(self):
        assert f_limit(0.9) == pytest.approx(0.039887, abs=1e-6)

    def test_pieces_enclose_mpmath(self):
        mp.mp.dps = 40
        q = mp.mpf(9) / 10
        L = mp.log(1 - q)
        F = -2 / q ** 2 - 1 / L + (2 - q) / ((1 - q) * L ** 2)
        r = e_one_dq_interval(from_fraction(Fraction(9, 10)))
        assert mp.mpf(float(r.lo)) <= F <= mp.mpf(float(r.hi))
        q = mp.mpf(91) / 100
        Bt = mp.log(1 - q) - 4 * q + 6
        r = b_tail_interval(from_fraction(Fraction(91, 100)))
        assert mp.mpf(float(r.lo)) <= Bt <= mp.mpf(float(r.hi))
        for qq in np.linspace(0.9, 0.91, 7):
            L = mp.log(1 - mp.mpf(qq))
            Nv = 4 * (1 - mp.mpf(qq)) ** 2 * L ** 3 + mp.mpf(qq) ** 4 * L + 2 * mp.mpf(qq) ** 3 * (2 - mp.mpf(qq))
            r = n_interval(Interval(qq))
            assert mp.mpf(float(r.lo)) <= Nv <= mp.mpf(float(r.hi))


class TestFirstGrid:
    def test_tilde_identity(self):
        q = 0.05
        lhs = (2 - q / 3 + q ** 3 / 90 - 29 * q ** 4 / 90) ** 2
        assert abs(lhs - (4 + q * e_tilde_one(Interval(q)).mid)) < 1e-15
        lhs0 = (2 + q / 3 + q ** 2 / 3 + 0.4 * q ** 3) ** 2
        assert abs(lhs0 - (4 + q * e_tilde_zero(Interval(q)).mid)) < 1e-15

    def test_tilde_bounds_bracket_boundary_factors(self):
        # lower polynomial bound for 1+E(1,q), upper for 1+E(0,q) on (0, 0.1]
        mp.mp.dps = 40
        for q in np.linspace(1e-4, 0.1, 200):
            qm = mp.mpf(q)
            L = mp.log(1 - qm)
            e1 = 2 / qm - 1 + (2 - qm) / L
            e0 = 1 - 2 / qm - (2 - qm) / ((1 - qm) * L)
            assert 1 + e1 >= 2 - qm / 3 + qm ** 3 / 90 - 29 * qm ** 4 / 90
            assert 1 + e0 <= 2 + qm / 3 + qm ** 2 / 3 + mp.mpf(2) / 5 * qm ** 3

    def test_m_is_b_over_q_at_exact_factors(self):
        # with the exact boundary factors M reduces to B/q; check the algebra pointwise
        from apsis.series import r_poly as R
        for s in (0.0, 0.2, 0.5):
            for q in (0.02, 0.07):
                l = 1 / 3 - 2 * s / 3
                rs, rr = (R(s, q) - l) / q, (R(1 - s, q) + l) / q
                p1, p0 = (1 + e_at_one(0, q)) ** 2, (1 + e_at_zero(0, q)) ** 2
                et1, et0 = (p1 - 4) / q, (p0 - 4) / q
                m = 4 * (rs + rr) + l * (et1 - et0) + q * (rs * et1 + rr * et0)
                b = R(s, q) * p1 + R(1 - s, q) * p0
                assert m == pytest.approx(b / q, rel=1e-9)

    def test_replay(self):
        rep = verify_first_grid()
        assert rep.passed
        assert rep.min_lo > 0.2744
        assert rep.cells == 250
        assert rep.elapsed_ms < 5000
        assert rep.min_lo <= rep.worst_cell["lo"] <= rep.min_hi

    def test_no_blowup_at_q_zero(self):
        # cells touching q = 0 have finite enclosures (no 1/q term survives)
        cells = rational_cells(Fraction(0), Fraction(1, 2), Fraction(1, 50))
        m = m_interval(cells, Interval(0.0, 0.01))
        assert np.all(np.isfinite(m.lo)) and np.all(np.isfinite(m.hi))
        assert np.all(m.hi - m.lo < 1.0)

    def test_tampered_threshold_fails(self):
        assert not verify_first_grid(threshold=1.0, max_depth=2).passed

    def test_unreachable_threshold_stops_early(self):
        # cells whose upper bound is below the threshold are not split further
        rep = verify_first_grid(threshold=1.0)
        assert not rep.passed and rep.elapsed_ms < 5000
        assert rep.min_hi <= 1.0


class TestBLower:
    def test_point_enclosure(self):
        r = b_lower(Interval(0.25), Interval(0.5))
        assert mp.mpf(float(r.lo)) <= _b_mp(0.25, 0.5) <= mp.mpf(float(r.hi))

    def test_random_cells_enclose_samples(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            s0, q0 = rng.uniform(0, 0.98), rng.uniform(0.1, 0.88)
            S, Q = Interval(s0, s0 + 0.02), Interval(q0, q0 + 0.02)
            for form in ("centered", "natural"):
                r = b_lower(S, Q, form=form)
                for s, q in rng.uniform([s0, q0], [s0 + 0.02, q0 + 0.02], (5, 2)):
                    assert mp.mpf(float(r.lo)) <= _b_mp(s, q) <= mp.mpf(float(r.hi))

    def test_symmetry_of_construction(self):
        # s -> 1-s swaps which R argument multiplies which boundary factor
        s, q = 0.25, 0.4
        p1, p0 = (1 + e_at_one(0, q)) ** 2, (1 + e_at_zero(0, q)) ** 2
        b = r_poly(s, q) * p1 + r_poly(1 - s, q) * p0
        b_swap = r_poly(1 - s, q) * p1 + r_poly(s, q) * p0
        assert b_lower(Interval(s), Interval(q)).mid == pytest.approx(b, rel=1e-12)
        assert b_lower(Interval(1 - s), Interval(q)).mid == pytest.approx(b_swap, rel=1e-12)

    def test_centered_tighter_than_natural(self):
        S, Q = Interval(0.0, 0.02), Interval(0.1, 0.102)
        c = b_lower(S, Q, "centered")
        n = b_lower(S, Q, "natural")
        assert c.lo > 0 > n.lo
        assert c.width < n.width

    def test_domain(self):
        with pytest.raises(IntervalDomainError):
            b_lower(Interval(0.5), Interval(0.0, 0.1))
        with pytest.raises(DomainError):
            b_lower(Interval(0.5, 1.1), Interval(0.5))
        with pytest.raises(DomainError):
            b_lower(Interval(0.5), Interval(0.5), form="other")


class TestSecondGrid:
    def test_coarse_smoke(self):
        rep = verify_second_grid(0.02, 0.002)
        assert rep.passed and rep.min_lo > 0
        assert rep.threshold is None and rep.details["mode"] == "positivity"
        assert rep.cells == 50 * 400
        assert rep.elapsed_ms < 5000

    def test_deterministic(self):
        a = verify_second_grid(0.05, 0.01).to_json()
        b = verify_second_grid(0.05, 0.01).to_json()
        a.pop("elapsed_ms"), b.pop("elapsed_ms")
        assert a == b

    def test_partition_independent(self):
        a = verify_second_grid(0.05, 0.01, chunk_q=7)
        b = verify_second_grid(0.05, 0.01, chunk_q=80)
        c = verify_second_grid(0.05, 0.01, workers=2, chunk_q=13)
        assert a.min_lo == b.min_lo == c.min_lo
        assert a.worst_cell == b.worst_cell == c.worst_cell

    def test_worst_cell_consistent(self):
        rep = verify_second_grid(0.05, 0.01)
        s, q = rep.worst_cell["s"], rep.worst_cell["q"]
        cell = b_lower(Interval(*s), Interval(*q))
        assert cell.lo >= rep.min_lo - 1e-15

    def test_explicit_threshold(self):
        rep = verify_second_grid(0.05, 0.01, threshold=10.0, max_depth=1)
        assert not rep.passed and rep.details["mode"] == "threshold"

    def test_bad_steps(self):
        with pytest.raises(DomainError):
            verify_second_grid(0.0, 0.01)

    def test_cells_cover_exactly(self):
        c = rational_cells(Fraction(1, 10), Fraction(9, 10), Fraction(1, 500))
        assert c.lo.size == 400
        assert c.lo[0] <= 0.1 and c.hi[-1] >= 0.9
        assert np.all(c.lo[1:] <= c.hi[:-1])


class TestCertificate:
    def test_roundtrip(self, tmp_path):
        rep = verify_tail_region()
        path = tmp_path / "cert.json"
        payload = write_certificate(str(path), {"tail": rep}, {"note": "x"})
        back = json.loads(path.read_text())
        assert back["pass"] is True and payload["pass"] is True
        r = back["reports"]["tail"]
        for key in ("grid_spec", "threshold", "min_lo", "min_hi", "worst_cell", "cells", "elapsed_ms", "pass"):
            assert key in r
        assert r["min_lo"] == rep.min_lo
        assert back["version"]

    def test_report_fields(self):
        rep = GridReport({}, 1.0, 0.5, 0.6, {}, 1, 0.0, False)
        assert rep.to_json()["pass"] is False
