"""Exact time representation and the drifting-clock model.

Durations and instants are plain Python ``int`` counts of femtoseconds
(1 tick = 1e-15 s). Python integers never overflow, so the signed 128-bit
envelope is enforced explicitly wherever a measurement is produced.

Estimators subtract millisecond-scale intervals to recover picosecond-scale
differences, which is why nothing in the measurement path goes through
binary floating point. Clock drift is held as an exact :class:`Fraction`.

Rounding is round-half-away-from-zero, applied once per measurement.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from decimal import Decimal
from fractions import Fraction
from numbers import Rational

TICKS_PER_SECOND = 10**15
FS = 1
PS = 10**3
NS = 10**6
US = 10**9
MS = 10**12
S = TICKS_PER_SECOND

TICK_MIN = -(2**127)
TICK_MAX = 2**127 - 1

# DW1000-style timestamp resolution, 1 / (128 * 499.2 MHz), rounded to 1 fs.
UWB_TICK = 15_650


class ConfigurationError(ValueError):
    """Raised for inputs that cannot describe a valid simulation."""


class TickOverflowError(ConfigurationError):
    """A result left the signed 128-bit tick range."""


def check_range(ticks: int) -> int:
    if not TICK_MIN <= ticks <= TICK_MAX:
        raise TickOverflowError(f"{ticks} fs is outside the 128-bit tick range")
    return ticks


def div_round(num: int, den: int) -> int:
    """Integer ``num / den`` rounded half away from zero."""
    if den == 0:
        raise ZeroDivisionError("div_round by zero")
    if den < 0:
        num, den = -num, -den
    q, r = divmod(abs(num), den)
    if 2 * r >= den:
        q += 1
    return q if num >= 0 else -q


def round_fraction(x: Rational) -> int:
    return div_round(x.numerator, x.denominator)


def scale(ratio: Rational, ticks: int) -> int:
    """``ratio * ticks`` with a single rounding."""
    return div_round(ratio.numerator * ticks, ratio.denominator)


def as_fraction(value: object) -> Fraction:
    """Exact rational from int, Fraction, Decimal, str or float.

    Floats go through their shortest ``repr`` so that ``10e-6`` means exactly
    1/100000 rather than the nearest binary double.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a number here")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ConfigurationError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, (Decimal, str)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def from_seconds(seconds: object) -> int:
    """Seconds (float, Decimal, str, Fraction) to ticks, round to nearest."""
    return check_range(round_fraction(as_fraction(seconds) * TICKS_PER_SECOND))


def to_seconds(ticks: int) -> float:
    """Ticks to float seconds. Lossy beyond ~9 s (53-bit mantissa)."""
    return ticks / TICKS_PER_SECOND


def to_decimal_seconds(ticks: int) -> Decimal:
    """Ticks to exact decimal seconds; round-trips through :func:`from_seconds`."""
    return Decimal(ticks).scaleb(-15)


def from_unit(value: object, unit: int) -> int:
    """``value`` given in ``unit`` ticks (e.g. ``NS``) to ticks."""
    return check_range(round_fraction(as_fraction(value) * unit))


@dataclass(frozen=True)
class ClockModel:
    """A node oscillator with constant fractional frequency error.

    A true interval ``x`` is measured locally as ``(1 + drift_e) * x``.
    ``offset`` is the local reading at true time zero; it cancels in every
    interval and only matters for absolute timestamps.
    """

    drift_e: Fraction = Fraction(0)
    offset: int = 0
    node_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift_e", as_fraction(self.drift_e))
        if not isinstance(self.offset, int):
            raise TypeError("offset must be an integer tick count")
        check_range(self.offset)
        if self.factor <= 0:
            raise ConfigurationError(
                f"clock {self.node_id!r}: factor 1 + drift_e must be positive"
            )

    @classmethod
    def from_ppm(cls, ppm: object, offset: int = 0, node_id: str = "") -> ClockModel:
        return cls(as_fraction(ppm) / 10**6, offset, node_id)

    @cached_property
    def factor(self) -> Fraction:
        return 1 + self.drift_e

    @property
    def drift_ppm(self) -> float:
        return float(self.drift_e * 10**6)

    def local_time(self, true_instant: Rational) -> Fraction:
        """Exact (unrounded) local reading at a true instant."""
        return self.offset + self.factor * true_instant


IDEAL = ClockModel()


def measure_local(clock: ClockModel, true_interval: int) -> int:
    """Locally measured length of a true interval, rounded to the nearest tick."""
    if true_interval < 0:
        raise ValueError("true_interval must be non-negative")
    k = clock.factor
    return check_range(div_round(k.numerator * true_interval, k.denominator))


def true_from_local(clock: ClockModel, local_interval: int) -> int:
    """Inverse of :func:`measure_local`, round to nearest."""
    k = clock.factor
    return check_range(div_round(k.denominator * local_interval, k.numerator))


def quantize(local_timestamp: int, quantum: int) -> int:
    """Truncate a local timestamp down to a multiple of ``quantum`` ticks."""
    if quantum <= 0:
        raise ConfigurationError("quantum must be positive")
    return (local_timestamp // quantum) * quantum

