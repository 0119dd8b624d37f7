import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rffso.channels import GammaGammaParams, RicianParams, rician_snr_cdf
from rffso.relay import (
    Modulation,
    RelaySystem,
    SeriesControl,
    SeriesResult,
    TruncationWarning,
    aser_closed_form,
    aser_quadrature,
    db_to_linear,
    end_to_end_snr,
    high_snr_slope,
    linear_to_db,
    outage_closed_form,
    outage_quadrature,
    pdf_closed_form,
    pdf_quadrature,
)
from rffso.specfun import DomainError

BPSK = Modulation.bpsk()


@pytest.fixture(scope="module")
def moderate():
    return RelaySystem.balanced(3, 2.50, 2.06, 10.0)


class TestBasics:
    def test_db(self):
        assert db_to_linear(10.0) == pytest.approx(10.0)
        assert db_to_linear(0.0) == 1.0
        assert linear_to_db(100.0) == pytest.approx(20.0)
        np.testing.assert_allclose(db_to_linear(np.array([0.0, 20.0])), [1.0, 100.0])

    def test_end_to_end(self):
        assert end_to_end_snr(4.0, 1.0, 1.0) == 2.0
        assert end_to_end_snr(4.0, 0.0, 1.0) == 0.0
        assert end_to_end_snr(4.0, 3.0, 0.0) == 4.0
        with pytest.raises(DomainError):
            end_to_end_snr(-1.0, 1.0, 1.0)

    @given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0.01, 100))
    @settings(max_examples=100)
    def test_end_to_end_bounded(self, g1, g2, c):
        assert 0 <= end_to_end_snr(g1, g2, c) <= g1

    def test_c_zero_flagged(self):
        with pytest.warns(RuntimeWarning, match="ideal-relay"):
            RelaySystem(RicianParams(1.0, 1.0), GammaGammaParams(3.0, 2.0, 1.0), 0.0)
        with pytest.raises(DomainError):
            RelaySystem(RicianParams(1.0, 1.0), GammaGammaParams(3.0, 2.0, 1.0), -1.0)

    def test_mpsk(self):
        m = Modulation.mpsk(4)
        assert m.a_coef == 2.0
        assert m.b_coef == pytest.approx(0.5)
        with pytest.raises(DomainError):
            Modulation(0.0, 1.0)

    def test_series_control(self):
        with pytest.raises(DomainError):
            SeriesControl(0)
        with pytest.raises(DomainError):
            SeriesControl(35, 0.0)

    def test_series_result_float(self):
        assert float(SeriesResult(np.float64(0.25), 3, False)) == 0.25
        assert type(SeriesResult(np.float64(0.25), 3, False).value) is float


class TestPdf:
    @pytest.mark.parametrize("r", [0.01, 0.1, 1.0, 10.0, 100.0])
    def test_closed_vs_quadrature(self, moderate, r):
        assert pdf_closed_form(r, moderate).value == pytest.approx(pdf_quadrature(r, moderate), rel=1e-8)

    def test_rayleigh_strong(self):
        s = RelaySystem.balanced(0, 2.04, 1.10, 5.0)
        for r in (0.05, 3.0):
            assert pdf_closed_form(r, s).value == pytest.approx(pdf_quadrature(r, s), rel=1e-8)

    def test_closed_form_normalized(self, moderate):
        f = lambda v: pdf_closed_form(math.exp(v), moderate).value * math.exp(v)
        total = integrate.quad(f, math.log(1e-9), math.log(2e3), epsabs=1e-10, epsrel=1e-8, limit=200)[0]
        assert total == pytest.approx(1.0, abs=1e-4)

    def test_domain(self, moderate):
        with pytest.raises(DomainError):
            pdf_closed_form(0.0, moderate)
        with pytest.raises(DomainError):
            pdf_quadrature(-1.0, moderate)


class TestOutage:
    # cross-validated by both engines (agree to ~1e-13)
    def test_reference_value(self, moderate):
        assert outage_closed_form(1.0, moderate).value == pytest.approx(0.11201656988194508, rel=1e-10)
        assert outage_quadrature(1.0, moderate) == pytest.approx(0.11201656988194508, rel=1e-10)

    @pytest.mark.parametrize("snr", [0, 10, 20, 30])
    @pytest.mark.parametrize("th_db", [0.0, 5.0])
    def test_closed_vs_quadrature(self, snr, th_db):
        s = RelaySystem.balanced(3, 2.50, 2.06, snr)
        th = db_to_linear(th_db)
        a = outage_closed_form(th, s)
        assert not a.truncated
        assert a.value == pytest.approx(outage_quadrature(th, s), rel=1e-8)

    def test_nondecreasing_in_threshold(self, moderate):
        vals = [outage_closed_form(db_to_linear(t), moderate).value for t in (-10, -5, 0, 5, 10, 15)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_nonincreasing_in_each_hop(self):
        base = dict(k1=3.0, alpha=2.5, beta=2.06)
        v1 = [
            outage_quadrature(1.0, RelaySystem(RicianParams(3.0, db_to_linear(g)), GammaGammaParams(2.5, 2.06, 10.0)))
            for g in (0, 5, 10, 15)
        ]
        v2 = [
            outage_quadrature(1.0, RelaySystem(RicianParams(3.0, 10.0), GammaGammaParams(2.5, 2.06, db_to_linear(g))))
            for g in (0, 5, 10, 15)
        ]
        assert base and all(b <= a for a, b in zip(v1, v1[1:]))
        assert all(b <= a for a, b in zip(v2, v2[1:]))

    def test_huge_threshold(self, moderate):
        assert outage_quadrature(1e9, moderate) == pytest.approx(1.0, abs=1e-12)
        assert outage_closed_form(1e3, moderate).value == pytest.approx(1.0, abs=1e-9)

    def test_ideal_relay_limit(self):
        with pytest.warns(RuntimeWarning):
            s = RelaySystem(RicianParams(3.0, 10.0), GammaGammaParams(2.5, 2.06, 10.0), 0.0)
        # gamma == gamma1 when C = 0
        assert outage_quadrature(2.0, s) == pytest.approx(rician_snr_cdf(2.0, s.rf), rel=1e-10)
        with pytest.raises(DomainError):
            outage_closed_form(2.0, s)

    def test_domain(self, moderate):
        with pytest.raises(DomainError):
            outage_closed_form(0.0, moderate)
        with pytest.raises(DomainError):
            outage_quadrature(-1.0, moderate)

    def test_truncation_flagged(self):
        s = RelaySystem.balanced(8, 2.50, 2.06, 10.0)
        with pytest.warns(TruncationWarning):
            res = outage_closed_form(1.0, s, SeriesControl(5))
        assert res.truncated
        assert res.terms == 9  # square truncation i, j < 5

    @given(
        st.sampled_from([(6.92, 6.52), (4.43, 4.39), (2.50, 2.06), (2.04, 1.10)]),
        st.sampled_from([0.0, 1.0, 2.5, 4.0]),
        st.floats(0.0, 30.0),
        st.floats(-5.0, 8.0),
    )
    @settings(max_examples=12, deadline=None)
    def test_engines_agree_random(self, pair, k1, snr, th_db):
        s = RelaySystem.balanced(k1, pair[0], pair[1], snr)
        th = db_to_linear(th_db)
        a = outage_closed_form(th, s).value
        q = outage_quadrature(th, s)
        assert abs(a - q) <= max(1e-5 * q, 1e-12)


class TestAser:
    def test_reference_value(self, moderate):
        assert aser_closed_form(BPSK, moderate).value == pytest.approx(0.028559918411706853, rel=1e-10)
        assert aser_quadrature(BPSK, moderate) == pytest.approx(0.028559918411706853, rel=1e-9)

    @pytest.mark.parametrize("snr", [5, 10, 15, 20, 25])
    def test_closed_vs_quadrature(self, snr):
        s = RelaySystem.balanced(3, 2.50, 2.06, snr)
        assert aser_closed_form(BPSK, s).value == pytest.approx(aser_quadrature(BPSK, s), rel=1e-5)

    def test_mpsk_engines_agree(self):
        s = RelaySystem.balanced(2, 4.43, 4.39, 12.0)
        m = Modulation.mpsk(8)
        a = aser_closed_form(m, s).value
        assert a == pytest.approx(aser_quadrature(m, s), rel=1e-8)
        assert 0 < a <= m.a_coef / 2

    def test_low_snr_limit(self):
        s = RelaySystem.balanced(3, 2.50, 2.06, -40.0)
        assert aser_quadrature(BPSK, s) == pytest.approx(0.5, abs=5e-3)
        assert aser_closed_form(BPSK, s).value == pytest.approx(0.5, abs=5e-3)

    def test_decreasing_in_snr(self):
        vals = [aser_closed_form(BPSK, RelaySystem.balanced(3, 2.50, 2.06, g)).value for g in range(0, 31, 5)]
        assert all(0 < v <= 0.5 for v in vals)
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_improves_with_k1(self):
        vals = [aser_closed_form(BPSK, RelaySystem.balanced(k, 2.50, 2.06, 15.0)).value for k in (0, 2, 4, 6)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_no_warning_when_converged(self, moderate):
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            aser_closed_form(BPSK, moderate)


class TestSlope:
    def test_exact_line(self):
        curve = [(s, 10 ** (-0.1 * s + 2)) for s in range(0, 31, 2)]
        assert high_snr_slope(curve) == pytest.approx(-1.0, rel=1e-12)

    def test_window(self):
        # steep early, -0.5 decade / 10 dB in the top 10 dB
        curve = [(s, 10 ** (-0.3 * s)) for s in range(0, 20, 2)] + [(s, 10 ** (-5.7 - 0.05 * (s - 19))) for s in range(20, 31, 2)]
        assert high_snr_slope(curve) == pytest.approx(-0.5, rel=1e-9)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            high_snr_slope([(28, 1e-3), (30, 1e-4)])
        with pytest.raises(DomainError):
            high_snr_slope([(0, 1e-3), (10, 1e-4), (30, 1e-5)])
