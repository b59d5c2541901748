"""Event-timeline simulation of one SS-TWR or DS-TWR exchange.

Initiator A polls responder B, B answers after ``delay_b``; in the
double-sided variant A sends a final message ``delay_a`` after receiving
the answer. A passive listener T overhears every message.

Timestamps are taken at the transmit/receive instant itself. Any fixed
MAC/PHY latency would add a constant to both ends of an interval and cancel.

Two independent routes produce an :class:`ExchangeRecord`:

* :func:`run_exchange` writes the true intervals in closed form from the
  ToFs and delays and measures each once with :func:`measure_local`;
* :func:`timeline_oracle` places every event on the true timeline as an
  exact rational, reads each node's affine clock (offset included) and
  differences the readings.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from twr_tdoa.geometry import GroundTruth, Position, ground_truth
from twr_tdoa.timebase import (
    ClockModel,
    ConfigurationError,
    check_range,
    measure_local,
    quantize,
    round_fraction,
)


class Variant(str, enum.Enum):
    SS = "SS"
    DS = "DS"


@dataclass(frozen=True)
class ProtocolTiming:
    """True response delays in ticks. ``delay_a`` is for DS-TWR only."""

    delay_b: int
    delay_a: int | None = None

    def validate(self, variant: Variant) -> None:
        if self.delay_b <= 0:
            raise ConfigurationError("timing.delay_b must be positive")
        if variant is Variant.DS:
            if self.delay_a is None:
                raise ConfigurationError("timing.delay_a is required for DS-TWR")
            if self.delay_a <= 0:
                raise ConfigurationError("timing.delay_a must be positive")
        elif self.delay_a is not None:
            raise ConfigurationError("timing.delay_a must not be set for SS-TWR")


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise levels; zero disables a source.

    ``cfo_sigma`` is the relative std-dev of the multiplicative error on each
    CFO ratio. ``rx_sigma`` is the std-dev, in ticks, of additive noise on
    every reception timestamp.
    """

    cfo_sigma: float = 0.0
    rx_sigma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("cfo_sigma", "rx_sigma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"noise.{name} must be finite and >= 0")

    @property
    def active(self) -> bool:
        return self.cfo_sigma > 0 or self.rx_sigma > 0


NO_NOISE = NoiseSpec()

# Reception events receiving timestamp noise, in draw order.
RX_EVENTS = ("a_rx_resp", "b_rx_poll", "b_rx_final", "t_rx_poll", "t_rx_resp", "t_rx_final")


@dataclass(frozen=True)
class NoiseDraws:
    eta_ab: float = 0.0
    eta_at: float = 0.0
    rx: tuple[int, ...] = (0,) * len(RX_EVENTS)


def draw_noise(noise: NoiseSpec, rng: np.random.Generator | None) -> NoiseDraws:
    """All random draws for one exchange, in a fixed order."""
    if not noise.active:
        return NoiseDraws()
    if rng is None:
        raise ConfigurationError("noise is enabled but no RNG was supplied")
    eta_ab = eta_at = 0.0
    if noise.cfo_sigma > 0:
        eta_ab, eta_at = (float(v) for v in rng.normal(0.0, noise.cfo_sigma, size=2))
    rx = (0,) * len(RX_EVENTS)
    if noise.rx_sigma > 0:
        rx = tuple(math.floor(float(v) + 0.5) for v in rng.normal(0.0, noise.rx_sigma, size=len(RX_EVENTS)))
    if not all(math.isfinite(v) for v in (eta_ab, eta_at)) or eta_ab <= -1 or eta_at <= -1:
        raise ConfigurationError("CFO noise draw is not a usable ratio")
    return NoiseDraws(eta_ab, eta_at, rx)


@dataclass(frozen=True)
class TrueIntervals:
    """Durations on the true timeline, in ticks."""

    r_a: int
    d_b: int
    m_a: int
    d_a: int | None = None
    r_b: int | None = None
    m_b: int | None = None


@dataclass(frozen=True)
class ExchangeRecord:
    """Everything one exchange lets the nodes measure, plus ground truth.

    Estimators must only read the ``*_hat_*`` and ``cfo_*`` fields.
    """

    variant: Variant
    r_hat_a: int
    d_hat_b: int
    m_hat_a: int
    d_hat_a: int | None
    r_hat_b: int | None
    m_hat_b: int | None
    cfo_ratio_ab: Fraction | None
    cfo_ratio_at: Fraction | None
    truth: GroundTruth
    clocks: tuple[ClockModel, ClockModel, ClockModel]
    timing: ProtocolTiming
    true_intervals: TrueIntervals | None = None

    @property
    def is_ds(self) -> bool:
        return self.variant is Variant.DS


def _cfo_ratios(clocks, draws: NoiseDraws) -> tuple[Fraction, Fraction]:
    ka, kb, kt = (c.factor for c in clocks)
    ratio_ab = ka / kb
    ratio_at = ka / kt
    if draws.eta_ab:
        ratio_ab *= 1 + Fraction(draws.eta_ab)
    if draws.eta_at:
        ratio_at *= 1 + Fraction(draws.eta_at)
    return ratio_ab, ratio_at


def _check_inputs(clocks, timing: ProtocolTiming, variant: Variant) -> Variant:
    variant = Variant(variant)
    if len(clocks) != 3:
        raise ConfigurationError("need exactly three clocks: initiator, responder, listener")
    timing.validate(variant)
    return variant


def exchange_from_truth(
    truth: GroundTruth,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
    timing: ProtocolTiming,
    variant: Variant | str = Variant.SS,
    noise: NoiseSpec = NO_NOISE,
    rng: np.random.Generator | None = None,
    t0: int = 0,
    quantum: int | None = None,
) -> ExchangeRecord:
    """Simulate one exchange for given propagation times.

    ``t0`` is the true instant of A's poll. ``quantum`` enables hardware-style
    truncation of local timestamps, which forces the timestamp route.
    """
    variant = _check_inputs(clocks, timing, variant)
    draws = draw_noise(noise, rng)
    if quantum is not None:
        return _timeline(truth, clocks, timing, variant, draws, t0, quantum)

    ca, cb, ct = clocks
    tab, tat, tbt = truth.tof_ab, truth.tof_at, truth.tof_bt
    db = timing.delay_b
    rx = dict(zip(RX_EVENTS, draws.rx))

    true = TrueIntervals(
        r_a=2 * tab + db,
        d_b=db,
        m_a=tab - tat + db + tbt,
    )
    r_hat_a = measure_local(ca, true.r_a) + rx["a_rx_resp"]
    d_hat_b = measure_local(cb, true.d_b) - rx["b_rx_poll"]
    m_hat_a = measure_local(ct, true.m_a) + rx["t_rx_resp"] - rx["t_rx_poll"]
    d_hat_a = r_hat_b = m_hat_b = None
    if variant is Variant.DS:
        da = timing.delay_a
        true = TrueIntervals(
            true.r_a, true.d_b, true.m_a,
            d_a=da,
            r_b=2 * tab + da,
            m_b=tab + da + tat - tbt,
        )
        d_hat_a = measure_local(ca, true.d_a) - rx["a_rx_resp"]
        r_hat_b = measure_local(cb, true.r_b) + rx["b_rx_final"]
        m_hat_b = measure_local(ct, true.m_b) + rx["t_rx_final"] - rx["t_rx_resp"]

    ratio_ab, ratio_at = _cfo_ratios(clocks, draws)
    return ExchangeRecord(
        variant, r_hat_a, d_hat_b, m_hat_a, d_hat_a, r_hat_b, m_hat_b,
        ratio_ab, ratio_at, truth, tuple(clocks), timing, true,
    )


def _timeline(truth, clocks, timing, variant, draws, t0, quantum):
    """Absolute-instant route shared by the oracle and the quantized mode."""
    ca, cb, ct = clocks
    t0 = Fraction(t0)
    tab, tat, tbt = (Fraction(v) for v in (truth.tof_ab, truth.tof_at, truth.tof_bt))
    rx = dict(zip(RX_EVENTS, draws.rx))

    # true instants
    a_tx_poll = t0
    b_rx_poll = a_tx_poll + tab
    t_rx_poll = a_tx_poll + tat
    b_tx_resp = b_rx_poll + timing.delay_b
    a_rx_resp = b_tx_resp + tab
    t_rx_resp = b_tx_resp + tbt

    def stamp(clock: ClockModel, instant, event: str | None = None):
        value = clock.local_time(instant)
        if event is not None:
            value += rx[event]
        if quantum is not None:
            value = quantize(math.floor(value), quantum)
        return value

    def span(start, end) -> int:
        return check_range(round_fraction(Fraction(end - start)))

    def exact(start, end) -> int:
        d = Fraction(end - start)
        if d.denominator != 1:
            raise AssertionError("true interval is not a whole number of ticks")
        return int(d)

    r_hat_a = span(stamp(ca, a_tx_poll), stamp(ca, a_rx_resp, "a_rx_resp"))
    d_hat_b = span(stamp(cb, b_rx_poll, "b_rx_poll"), stamp(cb, b_tx_resp))
    m_hat_a = span(stamp(ct, t_rx_poll, "t_rx_poll"), stamp(ct, t_rx_resp, "t_rx_resp"))
    true = TrueIntervals(
        r_a=exact(a_tx_poll, a_rx_resp),
        d_b=exact(b_rx_poll, b_tx_resp),
        m_a=exact(t_rx_poll, t_rx_resp),
    )
    d_hat_a = r_hat_b = m_hat_b = None
    if variant is Variant.DS:
        a_tx_final = a_rx_resp + timing.delay_a
        b_rx_final = a_tx_final + tab
        t_rx_final = a_tx_final + tat
        d_hat_a = span(stamp(ca, a_rx_resp, "a_rx_resp"), stamp(ca, a_tx_final))
        r_hat_b = span(stamp(cb, b_tx_resp), stamp(cb, b_rx_final, "b_rx_final"))
        m_hat_b = span(stamp(ct, t_rx_resp, "t_rx_resp"), stamp(ct, t_rx_final, "t_rx_final"))
        true = TrueIntervals(
            true.r_a, true.d_b, true.m_a,
            d_a=exact(a_rx_resp, a_tx_final),
            r_b=exact(b_tx_resp, b_rx_final),
            m_b=exact(t_rx_resp, t_rx_final),
        )

    ratio_ab, ratio_at = _cfo_ratios(clocks, draws)
    return ExchangeRecord(
        variant, r_hat_a, d_hat_b, m_hat_a, d_hat_a, r_hat_b, m_hat_b,
        ratio_ab, ratio_at, truth, tuple(clocks), timing, true,
    )


def oracle_from_truth(
    truth: GroundTruth,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
    timing: ProtocolTiming,
    variant: Variant | str = Variant.SS,
    noise: NoiseSpec = NO_NOISE,
    rng: np.random.Generator | None = None,
    t0: int = 0,
    quantum: int | None = None,
) -> ExchangeRecord:
    """Brute-force counterpart of :func:`exchange_from_truth`.

    Every instant is an exact :class:`Fraction`; local readings include the
    clock offsets and are differenced afterwards.
    """
    variant = _check_inputs(clocks, timing, variant)
    draws = draw_noise(noise, rng)
    return _timeline(truth, clocks, timing, variant, draws, t0, quantum)


def run_exchange(
    a: Position,
    b: Position,
    t: Position,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
    timing: ProtocolTiming,
    variant: Variant | str = Variant.SS,
    noise: NoiseSpec = NO_NOISE,
    rng: np.random.Generator | None = None,
    **kwargs,
) -> ExchangeRecord:
    return exchange_from_truth(ground_truth(a, b, t), clocks, timing, variant, noise, rng, **kwargs)


def timeline_oracle(
    a: Position,
    b: Position,
    t: Position,
    clocks: tuple[ClockModel, ClockModel, ClockModel],
    timing: ProtocolTiming,
    variant: Variant | str = Variant.SS,
    noise: NoiseSpec = NO_NOISE,
    rng: np.random.Generator | None = None,
    **kwargs,
) -> ExchangeRecord:
    return oracle_from_truth(ground_truth(a, b, t), clocks, timing, variant, noise, rng, **kwargs)
