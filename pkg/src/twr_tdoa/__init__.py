"""Two-way ranging under clock drift, with passive TDoA extraction.

All durations are plain ``int`` femtosecond counts (see :mod:`twr_tdoa.timebase`).
"""

from twr_tdoa.timebase import ClockModel, measure_local, true_from_local
from twr_tdoa.geometry import GroundTruth, Position, ground_truth, tof_between
from twr_tdoa.protocol import (
    ExchangeRecord,
    NoiseSpec,
    ProtocolTiming,
    Variant,
    run_exchange,
    timeline_oracle,
)
from twr_tdoa.estimators import RatioSource, estimate
from twr_tdoa.error_models import ErrorPrediction, predict
from twr_tdoa.localization import PositionFix, SolverConfig, TdoaMeasurement, solve

__all__ = [
    "ClockModel",
    "ErrorPrediction",
    "ExchangeRecord",
    "GroundTruth",
    "NoiseSpec",
    "Position",
    "PositionFix",
    "ProtocolTiming",
    "RatioSource",
    "SolverConfig",
    "TdoaMeasurement",
    "Variant",
    "estimate",
    "ground_truth",
    "measure_local",
    "predict",
    "run_exchange",
    "solve",
    "timeline_oracle",
    "tof_between",
    "true_from_local",
]
