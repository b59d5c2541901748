"""Randomized identity suite behind ``twr-tdoa selftest``.

Each check runs over the same batch of random exchanges and reports the
worst deviation seen against its bound. Output contains no timings so two
runs with the same seed print identical text.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction

from twr_tdoa import estimators as est
from twr_tdoa.error_models import predict, predict_exact
from twr_tdoa.geometry import GroundTruth, Position, ground_truth
from twr_tdoa.protocol import ProtocolTiming, Variant, exchange_from_truth, oracle_from_truth
from twr_tdoa.timebase import MS, US, ClockModel

HAT_FIELDS = ("r_hat_a", "d_hat_b", "m_hat_a", "d_hat_a", "r_hat_b", "m_hat_b")


@dataclass(frozen=True)
class Case:
    truth: GroundTruth
    clocks: tuple[ClockModel, ClockModel, ClockModel]
    timing: ProtocolTiming
    variant: Variant


def random_clock(rnd: random.Random, max_ppm: int = 50, max_offset: int = 0) -> ClockModel:
    # drift on a 1e-12 grid keeps every factor an exact small rational
    drift = Fraction(rnd.randint(-max_ppm * 10**6, max_ppm * 10**6), 10**12)
    offset = rnd.randint(-max_offset, max_offset) if max_offset else 0
    return ClockModel(drift, offset)


def random_case(rnd: random.Random, variant: Variant | None = None, extent_m: float = 300.0) -> Case:
    a, b, t = (Position(rnd.uniform(0, extent_m), rnd.uniform(0, extent_m)) for _ in range(3))
    if variant is None:
        variant = rnd.choice((Variant.SS, Variant.DS))
    db = rnd.randint(100 * US, 10 * MS)
    da = rnd.randint(100 * US, 10 * MS) if variant is Variant.DS else None
    clocks = (random_clock(rnd), random_clock(rnd), random_clock(rnd))
    return Case(ground_truth(a, b, t), clocks, ProtocolTiming(db, da), variant)


def ratio_quantization_bound(ratio: Fraction, den: int) -> Fraction:
    """Worst relative error of a measured ``num/den`` ratio when numerator and
    denominator each sum two half-tick-rounded measurements."""
    return (1 + ratio) / (ratio * (den - 1))


@dataclass
class Check:
    name: str
    bound: Fraction | int
    unit: str = "fs"
    worst: Fraction | int = 0
    cases: int = 0

    def record(self, deviation) -> None:
        self.cases += 1
        deviation = abs(deviation)
        if deviation > self.worst:
            self.worst = deviation

    @property
    def passed(self) -> bool:
        return self.worst <= self.bound

    def line(self) -> str:
        if self.unit == "rel":
            worst, bound = f"{float(self.worst):.3e}", "quantization"
        else:
            worst, bound = f"{float(self.worst):.3f}", f"{self.bound} fs"
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<28} {self.cases:>6} {worst:>12} {bound:>13}  {status}"


def run_selftest(seed: int = 0, n: int = 2000) -> list[Check]:
    rnd = random.Random(seed)
    checks = {
        c.name: c
        for c in (
            Check("round_trip_identity", 0),
            Check("ds_symmetry_identity", 0),
            Check("listener_span_identity", 0),
            Check("listener_sum_identity", 0),
            Check("simulator_vs_oracle", 2),
            Check("clock_offset_invariance", 0),
            Check("raw_tof_error", 2),
            Check("dc_a_tof_error", 2),
            Check("dc_b_tof_error", 2),
            Check("alt_ds_ratio", 1, "rel"),
            Check("raw_tdoa_decomposition", 4),
            Check("dc_a_tdoa_error", 4),
            Check("dc_t_tdoa_error", 4),
            Check("listener_ratio", 1, "rel"),
            Check("ds_symmetry_estimates", 4),
            Check("prediction_linearity", 2),
        )
    }

    for _ in range(n):
        case = random_case(rnd)
        truth, clocks, timing, variant = case.truth, case.clocks, case.timing, case.variant
        rec = exchange_from_truth(truth, clocks, timing, variant)
        shifted = tuple(replace(c, offset=rnd.randint(-(10**15), 10**15)) for c in clocks)
        oracle = oracle_from_truth(truth, shifted, timing, variant, t0=rnd.randint(0, 10**15))
        tr = oracle.true_intervals
        tab, tat, tbt, td = truth.tof_ab, truth.tof_at, truth.tof_bt, truth.td

        checks["round_trip_identity"].record(tr.r_a - (2 * tab + tr.d_b))
        checks["listener_span_identity"].record(tr.m_a - ((tab - tat) + tr.d_b + tbt))
        for f in HAT_FIELDS:
            if getattr(rec, f) is not None:
                checks["simulator_vs_oracle"].record(getattr(rec, f) - getattr(oracle, f))
        offset_free = oracle_from_truth(truth, clocks, timing, variant)
        checks["clock_offset_invariance"].record(
            max(abs((getattr(oracle, f) or 0) - (getattr(offset_free, f) or 0)) for f in HAT_FIELDS)
        )

        exact = predict_exact(truth, timing, clocks)
        report = est.estimate(rec, est.RatioSource.CFO)
        checks["raw_tof_error"].record((report.tof.raw - tab) - exact.raw_tof_err)
        checks["dc_a_tof_error"].record((report.tof.dc_a - tab) - exact.dc_a_tof_err)
        checks["dc_b_tof_error"].record((report.tof.dc_b - tab) - exact.dc_b_tof_err)
        # the raw-TDoA decomposition uses the ToF estimate actually used
        decomposition = (tab - report.tof.raw) + clocks[0].drift_e * tr.r_a - clocks[2].drift_e * tr.m_a
        checks["raw_tdoa_decomposition"].record((report.tdoa.raw_a - td) - decomposition)
        checks["dc_a_tdoa_error"].record((report.tdoa.dc_a - td) - exact.dc_a_tdoa_err)
        checks["dc_t_tdoa_error"].record((report.tdoa.dc_t - td) - exact.dc_t_tdoa_err)

        ka, kb, kt = (c.factor for c in clocks)
        if variant is Variant.DS:
            checks["ds_symmetry_identity"].record((tr.r_a + tr.d_a) - (tr.d_b + tr.r_b))
            checks["listener_sum_identity"].record((tr.r_a + tr.d_a) - (tr.m_a + tr.m_b))
            q = est.drift_ratio_alt_ds(rec)
            den = rec.d_hat_b + rec.r_hat_b
            rel = (q - ka / kb) / (ka / kb)
            checks["alt_ds_ratio"].record(rel / ratio_quantization_bound(q, den))
            p = est.listener_ratio_ds(rec)
            den = rec.r_hat_a + rec.d_hat_a
            rel = (p - kt / ka) / (kt / ka)
            checks["listener_ratio"].record(rel / ratio_quantization_bound(p, den))
            ds = est.estimate(rec, est.RatioSource.DS_SYMMETRY)
            for got, want in (
                (ds.tof.dc_a - tab, exact.dc_a_tof_err),
                (ds.tof.dc_b - tab, exact.dc_b_tof_err),
                (ds.tdoa.dc_a - td, exact.dc_a_tdoa_err),
                (ds.tdoa.dc_t - td, exact.dc_t_tdoa_err),
            ):
                checks["ds_symmetry_estimates"].record(got - want)

        zero = (ClockModel(), ClockModel(), ClockModel())
        double = tuple(ClockModel(2 * c.drift_e) for c in clocks)
        p0, p1, p2 = (predict(truth, timing, cs).as_dict() for cs in (zero, clocks, double))
        checks["prediction_linearity"].record(max(abs((p2[k] - p1[k]) - (p1[k] - p0[k])) for k in p0))

    return list(checks.values())


def report_lines(checks: list[Check], seed: int) -> list[str]:
    lines = [f"selftest seed={seed}", f"{'check':<28} {'cases':>6} {'worst':>12} {'bound':>13}  status"]
    lines += [c.line() for c in checks]
    lines.append("overall: " + ("PASS" if all(c.passed for c in checks) else "FAIL"))
    return lines

