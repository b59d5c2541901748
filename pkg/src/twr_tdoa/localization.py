"""Hyperbolic positioning from TDoA measurements.

Each measurement ties the unknown position ``p`` to the hyperbola branch
``|p - a| - |p - b| = c * td`` with foci at the two anchors. The solver
minimizes the weighted squared residuals with damped Gauss-Newton
(Levenberg: ``(J^T W J + lambda I) step = -J^T W r``).

Chan's closed-form method would be a natural initializer; the centroid is
good enough for tags inside the anchor hull.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError

from twr_tdoa.geometry import Position, distance_of


@dataclass(frozen=True)
class TdoaMeasurement:
    """``td = tof(anchor_a, tag) - tof(anchor_b, tag)`` in ticks."""

    anchor_a: Position
    anchor_b: Position
    td: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.weight >= 0:
            raise ValueError("weight must be non-negative")

    @property
    def range_difference(self) -> float:
        return distance_of(self.td)

    def is_feasible(self, slack: float = 0.0) -> bool:
        return abs(self.range_difference) <= self.anchor_a.distance(self.anchor_b) + slack


@dataclass(frozen=True)
class SolverConfig:
    dim: int = 2
    max_iterations: int = 50
    step_tol: float = 1e-9  # m
    cost_tol: float = 1e-12  # m^2
    lambda_init: float = 1e-3
    lambda_down: float = 0.3
    lambda_up: float = 10.0
    feasibility_slack: float = 1e-6  # m

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")


@dataclass(frozen=True)
class PositionFix:
    position: Position
    residual_rms: float
    iterations: int
    converged: bool
    outside_hull: bool = False
    infeasible: tuple[int, ...] = field(default=())


def _as_arrays(measurements, dim):
    a = np.array([m.anchor_a.as_array(dim) for m in measurements])
    b = np.array([m.anchor_b.as_array(dim) for m in measurements])
    rd = np.array([m.range_difference for m in measurements])
    w = np.array([m.weight for m in measurements], dtype=float)
    return a, b, rd, w


def residuals(p: np.ndarray, a: np.ndarray, b: np.ndarray, rd: np.ndarray) -> np.ndarray:
    return np.linalg.norm(p - a, axis=-1) - np.linalg.norm(p - b, axis=-1) - rd


def _jacobian(p, a, b):
    da, db = p - a, p - b
    na = np.linalg.norm(da, axis=1, keepdims=True)
    nb = np.linalg.norm(db, axis=1, keepdims=True)
    ua = np.divide(da, na, out=np.zeros_like(da), where=na > 0)
    ub = np.divide(db, nb, out=np.zeros_like(db), where=nb > 0)
    return ua - ub


def _outside_hull(point: np.ndarray, anchors: np.ndarray) -> bool:
    try:
        hull = Delaunay(anchors)
    except (QhullError, ValueError):
        return True
    return bool(hull.find_simplex(point[None, :])[0] < 0)


def solve(
    measurements: list[TdoaMeasurement],
    initial: Position | None = None,
    config: SolverConfig = SolverConfig(),
) -> PositionFix:
    dim = config.dim
    if len(measurements) < dim:
        raise ValueError(f"need at least {dim} TDoA measurements for a {dim}-D fix")
    a, b, rd, w = _as_arrays(measurements, dim)
    anchors = np.unique(np.vstack([a, b]), axis=0)
    infeasible = tuple(
        i for i, m in enumerate(measurements) if not m.is_feasible(config.feasibility_slack)
    )

    p = anchors.mean(axis=0) if initial is None else initial.as_array(dim)
    r = residuals(p, a, b, rd)
    cost = float(w @ r**2)
    lam = config.lambda_init
    converged = False
    full_rank_seen = False
    iterations = 0

    while iterations < config.max_iterations:
        iterations += 1
        jac = _jacobian(p, a, b)
        if np.linalg.matrix_rank(jac * np.sqrt(w)[:, None]) == dim:
            full_rank_seen = True
        jtw = jac.T * w
        normal = jtw @ jac
        grad = jtw @ r
        try:
            step = np.linalg.solve(normal + lam * np.eye(dim), -grad)
        except np.linalg.LinAlgError:
            lam *= config.lambda_up
            continue
        candidate = p + step
        r_new = residuals(candidate, a, b, rd)
        cost_new = float(w @ r_new**2)
        if cost_new <= cost:
            p, r = candidate, r_new
            drop = cost - cost_new
            cost = cost_new
            lam *= config.lambda_down
            if np.linalg.norm(step) < config.step_tol or drop < config.cost_tol:
                converged = True
                break
        else:
            lam *= config.lambda_up

    if not full_rank_seen:
        converged = False
    rms = float(np.sqrt(np.mean(r**2)))
    coords = [float(v) for v in p] + [0.0] * (3 - dim)
    return PositionFix(
        position=Position(*coords),
        residual_rms=rms,
        iterations=iterations,
        converged=converged,
        outside_hull=_outside_hull(p, anchors),
        infeasible=infeasible,
    )
