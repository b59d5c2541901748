import dataclasses
import random
from fractions import Fraction

import pytest

from twr_tdoa import estimators as est
from twr_tdoa.geometry import GroundTruth, Position, ground_truth
from twr_tdoa.protocol import ProtocolTiming, Variant, exchange_from_truth
from twr_tdoa.selftest import random_case, random_clock, ratio_quantization_bound
from twr_tdoa.timebase import FS, MS, NS, US, ClockModel


@pytest.fixture
def worked_rec(worked_truth, worked_clocks, ss_timing):
    return exchange_from_truth(worked_truth, worked_clocks, ss_timing)


@pytest.fixture
def worked_ds(worked_truth, worked_clocks, ds_timing):
    return exchange_from_truth(worked_truth, worked_clocks, ds_timing, Variant.DS)


def test_tof_raw_ideal(worked_truth, ideal_clocks, ss_timing):
    rec = exchange_from_truth(worked_truth, ideal_clocks, ss_timing)
    assert est.tof_raw(rec) == 100 * NS


def test_tof_raw_drifted(worked_rec):
    # (1_000_210_002_000 - 999_995_000_000) / 2
    assert est.tof_raw(worked_rec) == 107_501_000
    # (e_a R_a - e_b D_b) / 2 = (10.002 ns + 5 ns) / 2
    err = (Fraction(1, 10**5) * 1_000_200_000_000 + Fraction(5, 10**6) * MS) / 2
    assert est.tof_raw(worked_rec) - 100 * NS == err == 7_501_000


def test_tof_raw_vanishing_delay(worked_truth, worked_clocks):
    rec = exchange_from_truth(worked_truth, worked_clocks, ProtocolTiming(1 * FS))
    assert abs(est.tof_raw(rec) - worked_clocks[0].factor * worked_truth.tof_ab) <= 1


def test_alt_ds_ratio_ideal(worked_truth, ideal_clocks, ds_timing):
    rec = exchange_from_truth(worked_truth, ideal_clocks, ds_timing, Variant.DS)
    assert est.drift_ratio_alt_ds(rec) == 1
    assert est.listener_ratio_ds(rec) == 1


def test_alt_ds_ratio_drifted(worked_ds, worked_clocks):
    ka, kb, kt = (c.factor for c in worked_clocks)
    q = est.drift_ratio_alt_ds(worked_ds)
    assert abs(float(q) - 1.000015000075) < 1e-12
    assert abs(q / (ka / kb) - 1) <= ratio_quantization_bound(q, worked_ds.d_hat_b + worked_ds.r_hat_b)
    p = est.listener_ratio_ds(worked_ds)
    assert abs(p / (kt / ka) - 1) <= ratio_quantization_bound(p, worked_ds.r_hat_a + worked_ds.d_hat_a)


def test_ratio_needs_ds(worked_rec):
    with pytest.raises(est.UnsupportedVariantError):
        est.drift_ratio_alt_ds(worked_rec)
    with pytest.raises(est.UnsupportedVariantError):
        est.listener_ratio_ds(worked_rec)
    with pytest.raises(est.UnsupportedVariantError):
        est.estimate(worked_rec, "DS_SYMMETRY")


def test_alt_ds_ratio_independent_of_timing():
    rnd = random.Random(5)
    clocks = (ClockModel.from_ppm(10), ClockModel.from_ppm(-5), ClockModel.from_ppm(20))
    k = clocks[0].factor / clocks[1].factor
    for _ in range(100):
        truth = GroundTruth(rnd.randint(0, 10**9), rnd.randint(0, 10**9), rnd.randint(0, 10**9))
        timing = ProtocolTiming(rnd.randint(100 * US, 10 * MS), rnd.randint(100 * US, 10 * MS))
        rec = exchange_from_truth(truth, clocks, timing, Variant.DS)
        q = est.drift_ratio_alt_ds(rec)
        # half-tick rounding of the four intervals is the only error left
        assert abs(q / k - 1) <= ratio_quantization_bound(q, rec.d_hat_b + rec.r_hat_b)


def test_listener_ratio_independent_of_position(ds_timing):
    rnd = random.Random(6)
    clocks = (ClockModel.from_ppm(10), ClockModel.from_ppm(-5), ClockModel.from_ppm(20))
    k = clocks[2].factor / clocks[0].factor
    a, b = Position(0, 0), Position(60, 0)
    for _ in range(100):
        t = Position(rnd.uniform(-150, 150), rnd.uniform(-150, 150))
        rec = exchange_from_truth(ground_truth(a, b, t), clocks, ds_timing, Variant.DS)
        p = est.listener_ratio_ds(rec)
        assert abs(p / k - 1) <= ratio_quantization_bound(p, rec.r_hat_a + rec.d_hat_a)


def test_tof_dc_a_exact_ratio(worked_rec):
    assert est.tof_dc_a(worked_rec, worked_rec.cfo_ratio_ab) == est.tof_raw(worked_rec) - 7_500_000
    assert abs(est.tof_dc_a(worked_rec, worked_rec.cfo_ratio_ab) - 100_001_000) <= 2


def test_tof_dc_a_noisy_ratio(worked_rec):
    eta = Fraction(1, 10**8)
    ratio = worked_rec.cfo_ratio_ab
    shift = est.tof_dc_a(worked_rec, ratio * (1 + eta)) - est.tof_dc_a(worked_rec, ratio)
    brute = (worked_rec.r_hat_a - ratio * (1 + eta) * worked_rec.d_hat_b) / 2 - (
        worked_rec.r_hat_a - ratio * worked_rec.d_hat_b
    ) / 2
    assert abs(shift - brute) <= 1
    assert abs(shift - (-eta * worked_rec.d_hat_b / 2)) <= 2  # about -5 ps
    assert -5_001 <= shift <= -4_999


def test_tof_dc_b(worked_rec, worked_truth, ideal_clocks, ss_timing):
    ratio = worked_rec.cfo_ratio_ab
    assert abs(est.tof_dc_b(worked_rec, ratio) - 99_999_500) <= 2
    assert abs(est.tof_dc_a(worked_rec, ratio) - ratio * est.tof_dc_b(worked_rec, ratio)) <= 2
    ideal = exchange_from_truth(worked_truth, ideal_clocks, ss_timing)
    assert est.tof_dc_b(ideal, 1) == est.tof_dc_a(ideal, 1) == est.tof_raw(ideal)


def test_ratio_must_be_positive(worked_rec):
    with pytest.raises(ValueError):
        est.tof_dc_a(worked_rec, 0)


def test_tdoa_raw_ideal(worked_truth, ideal_clocks, ss_timing):
    rec = exchange_from_truth(worked_truth, ideal_clocks, ss_timing)
    # 1.0002 ms - 100 ns - (1 ms + 130 ns)
    assert est.tdoa_raw(rec, 100 * NS) == -30 * NS


def test_tdoa_raw_midpoint(ss_timing, ideal_clocks):
    rec = exchange_from_truth(
        ground_truth(Position(0, 0), Position(50, 0), Position(25, 0)), ideal_clocks, ss_timing
    )
    assert est.tdoa_raw(rec, est.tof_raw(rec)) == 0


def test_tdoa_raw_decomposition(worked_rec, worked_clocks, worked_truth):
    tof = est.tof_raw(worked_rec)
    ea, _, et = (c.drift_e for c in worked_clocks)
    tr = worked_rec.true_intervals
    expected = (worked_truth.tof_ab - tof) + ea * tr.r_a - et * tr.m_a
    assert abs((est.tdoa_raw(worked_rec, tof) - worked_truth.td) - expected) <= 4


def test_tdoa_dc_a_worked(worked_rec):
    tof = est.tof_dc_a(worked_rec, worked_rec.cfo_ratio_ab)
    got = est.tdoa_dc_a(worked_rec, tof, worked_rec.cfo_ratio_at)
    assert abs(got - (-30_000_300)) <= 4  # k_a * TD, error e_a * TD = -300 fs


def test_tdoa_dc_t_worked(worked_rec):
    tof = est.tof_dc_a(worked_rec, worked_rec.cfo_ratio_ab)
    ratio_at = worked_rec.cfo_ratio_at
    dc_t = est.tdoa_dc_t(worked_rec, tof, 1 / ratio_at)
    assert abs(dc_t - (-30_000_600)) <= 4
    assert abs(est.tdoa_dc_a(worked_rec, tof, ratio_at) - ratio_at * dc_t) <= 4


def test_ideal_tdoa_corrections_equal_raw(worked_truth, ideal_clocks, ss_timing):
    rec = exchange_from_truth(worked_truth, ideal_clocks, ss_timing)
    tof = est.tof_raw(rec)
    raw = est.tdoa_raw(rec, tof)
    assert est.tdoa_dc_a(rec, tof, 1) == est.tdoa_dc_t(rec, tof, 1) == raw == worked_truth.td


def test_tdoa_dc_a_bound_random():
    rnd = random.Random(77)
    for _ in range(1000):
        case = random_case(rnd)
        rec = exchange_from_truth(case.truth, case.clocks, case.timing, case.variant)
        report = est.estimate(rec)
        td = case.truth.td
        assert abs(report.tdoa.dc_a - td) <= abs(case.clocks[0].drift_e * td) + 4


def test_estimates_ignore_ground_truth(worked_ds):
    blind = dataclasses.replace(worked_ds, truth=GroundTruth(0, 0, 0), true_intervals=None)
    for source in ("CFO", "DS_SYMMETRY"):
        assert est.estimate(blind, source) == est.estimate(worked_ds, source)


def test_estimate_report_fields(worked_ds):
    report = est.estimate(worked_ds, est.RatioSource.ALT_DS)
    assert report.tof.source is est.RatioSource.DS_SYMMETRY
    assert report.tdoa.listener_ratio_used == est.listener_ratio_ds(worked_ds)
    assert None not in (report.tof.dc_a, report.tof.dc_b, report.tdoa.dc_a, report.tdoa.dc_t)


def test_zero_drift_recovers_truth_exactly():
    rnd = random.Random(8)
    ideal = (ClockModel(), ClockModel(), ClockModel())
    for _ in range(200):
        case = random_case(rnd, Variant.DS)
        rec = exchange_from_truth(case.truth, ideal, case.timing, Variant.DS)
        for source in ("CFO", "DS_SYMMETRY"):
            r = est.estimate(rec, source)
            assert r.tof.raw == r.tof.dc_a == r.tof.dc_b == case.truth.tof_ab
            assert r.tdoa.raw_a == r.tdoa.dc_a == r.tdoa.dc_t == case.truth.td


def test_random_clock_is_bounded():
    rnd = random.Random(0)
    assert all(abs(random_clock(rnd).drift_e) <= Fraction(50, 10**6) for _ in range(100))
