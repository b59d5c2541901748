"""Scenario pipeline: simulate, estimate, predict, optionally localize.

Random draws come from a counter-based Philox stream keyed by
``(seed, sweep index, listener index, exchange slot)``, so results do not
depend on the order in which sweep points are evaluated.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from twr_tdoa.error_models import CHANNELS, predict
from twr_tdoa.estimators import estimate
from twr_tdoa.geometry import ground_truth
from twr_tdoa.localization import PositionFix, SolverConfig, TdoaMeasurement, solve
from twr_tdoa.protocol import exchange_from_truth
from twr_tdoa.scenario import Scenario
from twr_tdoa.timebase import NS, from_unit

DELTA_BOUND = 4  # ticks


def channel_rng(seed: int, sweep_index: int, listener_index: int, slot: int = 0) -> np.random.Generator:
    key = np.random.SeedSequence([seed, sweep_index, listener_index, slot])
    return np.random.Generator(np.random.Philox(key))


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    sweep: tuple
    listener_id: str
    true_tof_ab: int
    true_td: int
    est: dict[str, int]
    pred: dict[str, int]
    fix: PositionFix | None = None

    @property
    def errors(self) -> dict[str, int]:
        return {
            ch: self.est[ch] - (self.true_tof_ab if ch.endswith("_tof") else self.true_td)
            for ch in CHANNELS
        }

    @property
    def delta(self) -> dict[str, int]:
        err = self.errors
        return {ch: err[ch] - self.pred[ch] for ch in CHANNELS}


def csv_columns(sweep_keys: Iterable[str]) -> list[str]:
    cols = list(sweep_keys) + ["listener_id", "true_tof_ab_fs", "true_td_fs"]
    for prefix in ("est", "pred", "delta"):
        cols += [f"{prefix}_{ch}_fs" for ch in CHANNELS]
    return cols + ["fix_x_m", "fix_y_m", "fix_residual_m"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def row_values(row: ResultRow) -> list:
    values = [v for _, v in row.sweep]
    values += [row.listener_id, row.true_tof_ab, row.true_td]
    values += [row.est[ch] for ch in CHANNELS]
    values += [row.pred[ch] for ch in CHANNELS]
    values += [row.delta[ch] for ch in CHANNELS]
    if row.fix is None:
        values += [None, None, None]
    else:
        values += [row.fix.position.x, row.fix.position.y, row.fix.residual_rms]
    return values


def _est_channels(report) -> dict[str, int]:
    tof, td = report.tof, report.tdoa
    return {
        "raw_tof": tof.raw,
        "dc_a_tof": tof.dc_a,
        "dc_b_tof": tof.dc_b,
        "raw_td": td.raw_a,
        "dc_a_td": td.dc_a,
        "dc_t_td": td.dc_t,
    }


def _exchange(sc: Scenario, initiator: str, responder: str, listener, truth, rng):
    clocks = (sc.clock(initiator), sc.clock(responder), sc.clock(listener.id))
    return exchange_from_truth(
        truth,
        clocks,
        sc.timing_ticks,
        sc.variant,
        sc.noise_spec,
        rng,
        t0=from_unit(sc.timing.t0_ns, NS),
        quantum=sc.quantum,
    )


def _locate(sc: Scenario, sweep_index: int, li: int, listener) -> PositionFix:
    loc = sc.localization
    tag = sc.position(listener.id)
    measurements = []
    for j, (ini, resp) in enumerate(loc.pairs):
        pa, pb = sc.position(ini), sc.position(resp)
        rng = channel_rng(sc.seed, sweep_index, li, 1 + j)
        rec = _exchange(sc, ini, resp, listener, ground_truth(pa, pb, tag), rng)
        report = estimate(rec, sc.ratio_source)
        td = {"raw": report.tdoa.raw_a, "dc_a": report.tdoa.dc_a, "dc_t": report.tdoa.dc_t}[loc.channel]
        measurements.append(TdoaMeasurement(pa, pb, td))
    return solve(measurements, config=SolverConfig(dim=sc.dim))


def run_point(sc: Scenario, sweep_index: int, overrides: tuple, localize: bool = False) -> list[ResultRow]:
    point = sc.with_overrides(overrides) if overrides else sc
    rows = []
    for li, listener in enumerate(point.nodes.listeners):
        truth = point.truth_for(listener)
        rng = channel_rng(point.seed, sweep_index, li)
        rec = _exchange(point, "A", "B", listener, truth, rng)
        report = estimate(rec, point.ratio_source)
        pred = predict(truth, rec.timing, rec.clocks).as_dict()
        fix = _locate(point, sweep_index, li, listener) if localize and point.localization else None
        rows.append(
            ResultRow(point.name, overrides, listener.id, truth.tof_ab, truth.td,
                      _est_channels(report), pred, fix)
        )
    return rows


def _run_point_job(args):
    data, sweep_index, overrides, localize = args
    return run_point(Scenario.model_validate(data), sweep_index, overrides, localize)


def run_rows(sc: Scenario, localize: bool = False, jobs: int = 1) -> list[ResultRow]:
    """All rows in sweep order. ``jobs > 1`` evaluates points in worker processes."""
    points = sc.sweep_points()
    if jobs <= 1 or len(points) == 1:
        chunks = [run_point(sc, i, ov, localize) for i, ov in enumerate(points)]
    else:
        data = sc.model_dump(mode="json")
        args = [(data, i, ov, localize) for i, ov in enumerate(points)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_point_job, args))
    return [row for chunk in chunks for row in chunk]


@dataclass
class Summary:
    rows: int = 0
    noise_active: bool = False
    max_delta: dict[str, int] = field(default_factory=lambda: dict.fromkeys(CHANNELS, 0))
    fixes: int = 0
    fixes_converged: int = 0

    @property
    def passed(self) -> bool:
        return all(v <= DELTA_BOUND for v in self.max_delta.values())

    def update(self, row: ResultRow) -> None:
        self.rows += 1
        for ch, d in row.delta.items():
            self.max_delta[ch] = max(self.max_delta[ch], abs(d))
        if row.fix is not None:
            self.fixes += 1
            self.fixes_converged += row.fix.converged

    def lines(self) -> list[str]:
        out = [f"rows: {self.rows}"]
        if self.noise_active:
            out.append("noise: active (bound applies to noise-free runs only)")
        out.append(f"{'channel':<10} {'max |delta| fs':>15}  bound {DELTA_BOUND}")
        for ch in CHANNELS:
            status = "PASS" if self.max_delta[ch] <= DELTA_BOUND else "FAIL"
            out.append(f"{ch:<10} {self.max_delta[ch]:>15}  {status}")
        if self.fixes:
            out.append(f"fixes: {self.fixes_converged}/{self.fixes} converged")
        out.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return out


def summarize(sc: Scenario, rows: list[ResultRow]) -> Summary:
    summary = Summary(noise_active=sc.noise_spec.active)
    for row in rows:
        summary.update(row)
    return summary


def write_csv(sc: Scenario, rows: list[ResultRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(csv_columns(ax.path for ax in sc.sweep))
    for row in rows:
        writer.writerow([_fmt(v) for v in row_values(row)])


def write_jsonl(sc: Scenario, rows: list[ResultRow], out: IO[str]) -> None:
    cols = csv_columns(ax.path for ax in sc.sweep)
    for row in rows:
        record = {"scenario": row.scenario}
        for col, value in zip(cols, row_values(row)):
            if isinstance(value, float) and not math.isfinite(value):
                value = None
            record[col] = value
        out.write(json.dumps(record) + "\n")


def write_plot_data(sc: Scenario, rows: list[ResultRow], directory: Path) -> list[Path]:
    """One ``(x, error)`` series file per sweep axis."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for i, axis in enumerate(sc.sweep):
        path = directory / (axis.path.replace(".", "_") + ".csv")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["x", "listener_id"]
            + [f"err_{ch}_fs" for ch in CHANNELS]
            + [f"pred_{ch}_fs" for ch in CHANNELS]
        )
        for row in rows:
            err = row.errors
            writer.writerow(
                [_fmt(row.sweep[i][1]), row.listener_id]
                + [err[ch] for ch in CHANNELS]
                + [row.pred[ch] for ch in CHANNELS]
            )
        path.write_text(buf.getvalue())
        written.append(path)
    return written
