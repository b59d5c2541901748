"""Scenario files: strict JSON schema, validation and sweep expansion.

Units are part of every field name (``pos_m``, ``drift_ppm``,
``delay_b_ns`` ...). Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import itertools
import json
from decimal import Decimal
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from twr_tdoa.geometry import GroundTruth, Position, ground_truth
from twr_tdoa.protocol import NoiseSpec, ProtocolTiming, Variant
from twr_tdoa.timebase import NS, PS, ClockModel, from_unit

Scalar = Union[int, float, str, bool, None]


class ScenarioError(ValueError):
    """Unreadable or invalid scenario file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NodeSpec(_Strict):
    pos_m: list[float]


class ListenerSpec(_Strict):
    id: str
    pos_m: Optional[list[float]] = None
    tof_at_ns: Optional[float] = Field(default=None, ge=0)
    tof_bt_ns: Optional[float] = Field(default=None, ge=0)


class NodesSpec(_Strict):
    A: Optional[NodeSpec] = None
    B: Optional[NodeSpec] = None
    tof_ab_ns: Optional[float] = Field(default=None, ge=0)
    listeners: list[ListenerSpec] = Field(min_length=1)


class ClockSpec(_Strict):
    drift_ppm: float = 0.0
    offset_ns: float = 0.0


class TimingSpec(_Strict):
    delay_b_ns: float = Field(gt=0)
    delay_a_ns: Optional[float] = Field(default=None, gt=0)
    t0_ns: float = 0.0


class NoiseCfg(_Strict):
    cfo_sigma: float = Field(default=0.0, ge=0)
    rx_sigma_ps: float = Field(default=0.0, ge=0)


class SweepAxis(_Strict):
    path: str
    values: Optional[list[Scalar]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self) -> SweepAxis:
        ranged = (self.start, self.stop, self.step)
        if self.values is not None:
            if any(v is not None for v in ranged):
                raise ValueError("give either values or start/stop/step, not both")
            if not self.values:
                raise ValueError("values must not be empty")
        elif any(v is None for v in ranged):
            raise ValueError("start, stop and step are all required without values")
        elif self.step == 0 or (self.stop - self.start) * self.step < 0:
            raise ValueError("step must be non-zero and point from start to stop")
        return self

    def points(self) -> list[Scalar]:
        if self.values is not None:
            return list(self.values)
        start, stop, step = (Decimal(repr(v)) for v in (self.start, self.stop, self.step))
        count = int((stop - start) / step) + 1
        out = []
        for i in range(count):
            v = start + i * step
            out.append(int(v) if v == v.to_integral_value() else float(v))
        return out


class LocalizationSpec(_Strict):
    anchors: dict[str, NodeSpec] = Field(default_factory=dict)
    pairs: list[tuple[str, str]] = Field(min_length=1)
    channel: Literal["raw", "dc_a", "dc_t"] = "dc_a"


class Scenario(_Strict):
    name: str = "scenario"
    variant: Variant
    ratio_source: Literal["CFO", "DS_SYMMETRY"] = "CFO"
    nodes: NodesSpec
    clocks: dict[str, ClockSpec] = Field(default_factory=dict)
    timing: TimingSpec
    noise: NoiseCfg = NoiseCfg()
    sweep: list[SweepAxis] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0, lt=2**64)
    quantization_ps: Optional[float] = Field(default=None, gt=0)
    three_d: bool = False
    localization: Optional[LocalizationSpec] = None

    @model_validator(mode="after")
    def _check(self) -> Scenario:
        if self.variant is Variant.DS and self.timing.delay_a_ns is None:
            raise ValueError("timing.delay_a: required for variant DS")
        if self.variant is Variant.SS and self.timing.delay_a_ns is not None:
            raise ValueError("timing.delay_a: must be omitted for variant SS")
        if self.ratio_source == "DS_SYMMETRY" and self.variant is not Variant.DS:
            raise ValueError("ratio_source: DS_SYMMETRY needs variant DS")

        dims = (3,) if self.three_d else (2,)
        nodes = self.nodes
        direct = nodes.tof_ab_ns is not None
        if direct:
            if nodes.A is not None or nodes.B is not None:
                raise ValueError("nodes: give either tof_ab_ns or A/B positions")
            if self.localization is not None:
                raise ValueError("localization: needs positions, not direct ToFs")
        elif nodes.A is None or nodes.B is None:
            raise ValueError("nodes.A / nodes.B: positions required without tof_ab_ns")
        else:
            for name, node in (("A", nodes.A), ("B", nodes.B)):
                if len(node.pos_m) not in dims:
                    raise ValueError(f"nodes.{name}.pos_m: expected {dims[0]} coordinates")

        seen = set()
        for i, ls in enumerate(nodes.listeners):
            where = f"nodes.listeners.{i}"
            if ls.id in seen or ls.id in ("A", "B"):
                raise ValueError(f"{where}.id: duplicate node name {ls.id!r}")
            seen.add(ls.id)
            has_tof = ls.tof_at_ns is not None and ls.tof_bt_ns is not None
            if direct and (ls.pos_m is not None or not has_tof):
                raise ValueError(f"{where}: direct-ToF scenarios need tof_at_ns and tof_bt_ns")
            if not direct:
                if ls.pos_m is None or ls.tof_at_ns is not None or ls.tof_bt_ns is not None:
                    raise ValueError(f"{where}.pos_m: required (and no ToFs) with positioned A/B")
                if len(ls.pos_m) not in dims:
                    raise ValueError(f"{where}.pos_m: expected {dims[0]} coordinates")

        names = {"A", "B"} | seen
        if self.localization is not None:
            for name, node in self.localization.anchors.items():
                if name in names:
                    raise ValueError(f"localization.anchors.{name}: duplicate node name")
                if len(node.pos_m) not in dims:
                    raise ValueError(f"localization.anchors.{name}.pos_m: expected {dims[0]} coordinates")
            active = {"A", "B"} | set(self.localization.anchors)
            for j, (ini, resp) in enumerate(self.localization.pairs):
                if ini not in active or resp not in active or ini == resp:
                    raise ValueError(f"localization.pairs.{j}: unknown or repeated anchor")
            if len(self.localization.pairs) < dims[0]:
                raise ValueError(f"localization.pairs: need at least {dims[0]} pairs")
            names |= set(self.localization.anchors)

        for name in self.clocks:
            if name not in names:
                raise ValueError(f"clocks.{name}: no such node")
        for name in sorted(names):
            if name not in self.clocks:
                self.clocks[name] = ClockSpec()
        for name, clock in self.clocks.items():
            if clock.drift_ppm <= -1e6:
                raise ValueError(f"clocks.{name}.drift_ppm: clock factor must stay positive")
        return self

    # domain conversions

    @property
    def timing_ticks(self) -> ProtocolTiming:
        da = self.timing.delay_a_ns
        return ProtocolTiming(
            from_unit(self.timing.delay_b_ns, NS),
            None if da is None else from_unit(da, NS),
        )

    @property
    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.noise.cfo_sigma, float(self.noise.rx_sigma_ps) * PS)

    @property
    def quantum(self) -> int | None:
        if self.quantization_ps is None:
            return None
        return from_unit(self.quantization_ps, PS)

    @property
    def dim(self) -> int:
        return 3 if self.three_d else 2

    def clock(self, name: str) -> ClockModel:
        spec = self.clocks[name]
        return ClockModel.from_ppm(spec.drift_ppm, from_unit(spec.offset_ns, NS), name)

    def position(self, name: str) -> Position:
        if name == "A":
            return Position.of(self.nodes.A.pos_m)
        if name == "B":
            return Position.of(self.nodes.B.pos_m)
        for ls in self.nodes.listeners:
            if ls.id == name:
                return Position.of(ls.pos_m)
        return Position.of(self.localization.anchors[name].pos_m)

    def truth_for(self, listener: ListenerSpec) -> GroundTruth:
        if self.nodes.tof_ab_ns is not None:
            return GroundTruth(
                from_unit(self.nodes.tof_ab_ns, NS),
                from_unit(listener.tof_at_ns, NS),
                from_unit(listener.tof_bt_ns, NS),
            )
        return ground_truth(self.position("A"), self.position("B"), Position.of(listener.pos_m))

    def sweep_points(self) -> list[tuple[tuple[str, Scalar], ...]]:
        """Cartesian product of all axes, first axis slowest."""
        if not self.sweep:
            return [()]
        axes = [[(ax.path, v) for v in ax.points()] for ax in self.sweep]
        return [tuple(p) for p in itertools.product(*axes)]

    def with_overrides(self, overrides) -> Scenario:
        data = self.model_dump(mode="json")
        for path, value in overrides:
            _set_path(data, path, value)
        try:
            return Scenario.model_validate(data)
        except ValidationError as exc:
            where = ", ".join(f"{p}={v!r}" for p, v in overrides)
            raise ScenarioError(f"sweep point {where}: {_describe(exc)}") from exc


def _split(path: str) -> list[str | int]:
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def _set_path(data: Any, path: str, value: Any) -> None:
    *head, last = _split(path)
    node = data
    for key in head:
        node = node[key]
    if isinstance(node, list):
        node[last] = value
    elif last in node:
        node[last] = value
    else:
        raise KeyError(path)


def _resolve(data: Any, path: str) -> bool:
    node = data
    for key in _split(path):
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            return False
    return not isinstance(node, (dict, list))


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"].removeprefix("Value error, ")
        parts.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(parts)


def parse_scenario(data: Any, source: str = "<scenario>") -> Scenario:
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"{source}: {_describe(exc)}") from exc
    dumped = scenario.model_dump(mode="json")
    for i, axis in enumerate(scenario.sweep):
        if axis.path.startswith("sweep") or not _resolve(dumped, axis.path):
            raise ScenarioError(f"{source}: sweep.{i}.path: {axis.path!r} is not a parameter")
    for overrides in scenario.sweep_points():
        scenario.with_overrides(overrides)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_scenario(copy.deepcopy(data), str(path))
