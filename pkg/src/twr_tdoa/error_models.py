"""Closed-form error predictions for every estimator.

Predictions are evaluated exactly from ground truth and the clock drifts,
then rounded once to ticks. They assume the estimators were fed the exact
drift ratios; with noisy ratios the simulated error departs from them.

``dc_t_tdoa`` (``e_t * TD``) is the listener-clock analogue of the
initiator-clock result and is labelled as derived in :data:`CHANNEL_NOTES`.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from fractions import Fraction

from twr_tdoa.geometry import GroundTruth
from twr_tdoa.protocol import ProtocolTiming
from twr_tdoa.timebase import ClockModel, round_fraction

CHANNELS = ("raw_tof", "dc_a_tof", "dc_b_tof", "raw_td", "dc_a_td", "dc_t_td")

CHANNEL_NOTES = {
    "raw_tof": "(e_a*R_a - e_b*D_b)/2",
    "dc_a_tof": "e_a*T_ab",
    "dc_b_tof": "e_b*T_ab",
    "raw_td": "(T_ab - T_ab_raw) + e_a*R_a - e_t*M_a",
    "dc_a_td": "e_a*TD",
    "dc_t_td": "e_t*TD (derived analogue)",
}


@dataclass(frozen=True)
class ErrorPrediction:
    """Predicted ``estimate - truth`` per channel, in ticks."""

    raw_tof_err: int
    dc_a_tof_err: int
    dc_b_tof_err: int
    raw_tdoa_err: int
    dc_a_tdoa_err: int
    dc_t_tdoa_err: int

    def as_dict(self) -> dict[str, int]:
        return dict(zip(CHANNELS, astuple(self)))


@dataclass(frozen=True)
class ExactPrediction:
    raw_tof_err: Fraction
    dc_a_tof_err: Fraction
    dc_b_tof_err: Fraction
    raw_tdoa_err: Fraction
    dc_a_tdoa_err: Fraction
    dc_t_tdoa_err: Fraction

    def rounded(self) -> ErrorPrediction:
        return ErrorPrediction(*(round_fraction(getattr(self, f.name)) for f in fields(self)))


def predict_exact(
    truth: GroundTruth,
    timing: ProtocolTiming,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
) -> ExactPrediction:
    ea, eb, et = (c.drift_e for c in clocks)
    tab, td = truth.tof_ab, truth.td
    db = timing.delay_b
    r_a = 2 * tab + db
    m_a = tab - truth.tof_at + db + truth.tof_bt

    raw_tof = (ea * r_a - eb * db) / 2
    # the raw ToF estimate overshoots by raw_tof, so T_ab - T_ab_raw = -raw_tof
    raw_td = -raw_tof + ea * r_a - et * m_a
    return ExactPrediction(
        raw_tof_err=raw_tof,
        dc_a_tof_err=ea * tab,
        dc_b_tof_err=eb * tab,
        raw_tdoa_err=raw_td,
        dc_a_tdoa_err=ea * td,
        dc_t_tdoa_err=et * td,
    )


def predict(
    truth: GroundTruth,
    timing: ProtocolTiming,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
) -> ErrorPrediction:
    return predict_exact(truth, timing, clocks).rounded()
