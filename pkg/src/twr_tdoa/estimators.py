"""ToF and TDoA estimators computed from local measurements only.

Every function here reads the ``*_hat_*`` intervals and CFO ratios of an
:class:`ExchangeRecord` and never its ground truth. Drift ratios stay exact
:class:`Fraction` values until the final multiply, which is rounded once
(half away from zero) to a whole tick.

Ratio conventions:

* ``ratio_ab`` is ``k_a / k_b``, initiator clock over responder clock;
* ``ratio_at`` is ``k_a / k_t`` and ``ratio_ta`` is its inverse.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from twr_tdoa.protocol import ExchangeRecord, Variant
from twr_tdoa.timebase import ConfigurationError, div_round


class UnsupportedVariantError(ConfigurationError):
    pass


class RatioSource(str, enum.Enum):
    """Where drift ratios come from.

    ``CFO`` uses the carrier-frequency-offset ratios carried by the record.
    ``DS_SYMMETRY`` derives them from the double-sided interval sums; the
    ToF side of that is the "Alternative DS-TWR" ratio, hence ``ALT_DS``.
    """

    CFO = "CFO"
    DS_SYMMETRY = "DS_SYMMETRY"
    ALT_DS = "DS_SYMMETRY"


def _require_ds(rec: ExchangeRecord) -> None:
    if rec.variant is not Variant.DS:
        raise UnsupportedVariantError("drift ratio from interval sums needs a DS-TWR record")


def _positive(ratio: Fraction, name: str) -> Fraction:
    ratio = Fraction(ratio)
    if ratio <= 0:
        raise ValueError(f"{name} must be positive")
    return ratio


def tof_raw(rec: ExchangeRecord) -> int:
    """Uncorrected ToF: half of round time minus reply delay."""
    return div_round(rec.r_hat_a - rec.d_hat_b, 2)


def drift_ratio_alt_ds(rec: ExchangeRecord) -> Fraction:
    """``k_a / k_b`` from the DS-TWR symmetry ``R_a + D_a = D_b + R_b``."""
    _require_ds(rec)
    return Fraction(rec.r_hat_a + rec.d_hat_a, rec.d_hat_b + rec.r_hat_b)


def tof_dc_a(rec: ExchangeRecord, ratio_ab: Fraction) -> int:
    """ToF in the initiator's clock, with the reply delay rescaled by ``k_a/k_b``.

    With the exact ratio this is ``k_a * T_ab``.
    """
    ratio = _positive(ratio_ab, "ratio_ab")
    n, d = ratio.numerator, ratio.denominator
    return div_round(rec.r_hat_a * d - rec.d_hat_b * n, 2 * d)


def tof_dc_b(rec: ExchangeRecord, ratio_ab: Fraction) -> int:
    """ToF in the responder's clock; ``k_b * T_ab`` with the exact ratio."""
    ratio = _positive(ratio_ab, "ratio_ab")
    n, d = ratio.numerator, ratio.denominator
    return div_round(rec.r_hat_a * d - rec.d_hat_b * n, 2 * n)


def tdoa_raw(rec: ExchangeRecord, tof_est: int) -> int:
    """Listener TDoA, no drift correction: ``R_a - T_ab - M_a``."""
    return rec.r_hat_a - tof_est - rec.m_hat_a


def listener_ratio_ds(rec: ExchangeRecord) -> Fraction:
    """``k_t / k_a``: the listener's two spans cover the initiator's two."""
    _require_ds(rec)
    return Fraction(rec.m_hat_a + rec.m_hat_b, rec.r_hat_a + rec.d_hat_a)


def tdoa_dc_a(rec: ExchangeRecord, tof_dc_a: int, ratio_at: Fraction) -> int:
    """TDoA in the initiator's clock, listener span rescaled by ``k_a/k_t``."""
    ratio = _positive(ratio_at, "ratio_at")
    n, d = ratio.numerator, ratio.denominator
    return div_round((rec.r_hat_a - tof_dc_a) * d - rec.m_hat_a * n, d)


def tdoa_dc_t(rec: ExchangeRecord, tof_dc_a: int, ratio_ta: Fraction) -> int:
    """TDoA in the listener's clock, initiator span rescaled by ``k_t/k_a``."""
    ratio = _positive(ratio_ta, "ratio_ta")
    n, d = ratio.numerator, ratio.denominator
    return div_round((rec.r_hat_a - tof_dc_a) * n - rec.m_hat_a * d, d)


@dataclass(frozen=True)
class TofEstimates:
    raw: int
    dc_a: int | None = None
    dc_b: int | None = None
    drift_ratio_used: Fraction | None = None
    source: RatioSource | None = None


@dataclass(frozen=True)
class TdoaEstimates:
    raw_a: int
    dc_a: int | None = None
    dc_t: int | None = None
    listener_ratio_used: Fraction | None = None  # k_t / k_a
    source: RatioSource | None = None


@dataclass(frozen=True)
class EstimateReport:
    tof: TofEstimates
    tdoa: TdoaEstimates


def ratios_for(rec: ExchangeRecord, source: RatioSource | str) -> tuple[Fraction | None, Fraction | None]:
    """``(k_a/k_b, k_t/k_a)`` from the requested source; ``None`` if unavailable."""
    source = RatioSource(source)
    if source is RatioSource.CFO:
        ratio_ta = None if rec.cfo_ratio_at is None else 1 / rec.cfo_ratio_at
        return rec.cfo_ratio_ab, ratio_ta
    return drift_ratio_alt_ds(rec), listener_ratio_ds(rec)


def estimate(rec: ExchangeRecord, source: RatioSource | str = RatioSource.CFO) -> EstimateReport:
    """Run every estimator on one record.

    The raw TDoA uses the raw ToF; both corrected TDoAs use the DC-A ToF.
    """
    source = RatioSource(source)
    ratio_ab, ratio_ta = ratios_for(rec, source)

    raw = tof_raw(rec)
    if ratio_ab is None:
        tof = TofEstimates(raw)
    else:
        tof = TofEstimates(raw, tof_dc_a(rec, ratio_ab), tof_dc_b(rec, ratio_ab), ratio_ab, source)

    td_raw = tdoa_raw(rec, raw)
    if ratio_ta is None or tof.dc_a is None:
        tdoa = TdoaEstimates(td_raw)
    else:
        tdoa = TdoaEstimates(
            td_raw,
            tdoa_dc_a(rec, tof.dc_a, 1 / ratio_ta),
            tdoa_dc_t(rec, tof.dc_a, ratio_ta),
            ratio_ta,
            source,
        )
    return EstimateReport(tof, tdoa)
