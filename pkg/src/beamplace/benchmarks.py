"""Evaluation metrics and the two comparison baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coverage_graph import BeamPlan, plan_from_partition
from .geometry import (
    EARTH_RADIUS_KM,
    GeoPoint,
    SatellitePose,
    ecef_array,
    great_circle_distance,
    slant_range,
    view_angle,
    view_angle_matrix,
)
from .link_budget import LinkBudgetParams, PowerPolicy, equal_split_power, link_metrics


@dataclass(frozen=True)
class UserRecord:
    user: int
    beam: int
    theta_deg: float
    scgnr_db: float
    cnr_db: float


@dataclass(frozen=True)
class EvaluationReport:
    per_user: tuple[UserRecord, ...]
    min_cnr_db: float
    avg_cnr_db: float
    load_gap: float
    n_beams: int
    objective: float
    cdf_points: tuple[float, ...]


def load_gap(plan: BeamPlan, mode: str = "range") -> float:
    """Dispersion of beam occupancy: max - min (default) or population variance."""
    sizes = plan.sizes
    if not sizes:
        return 0
    if mode == "range":
        return max(sizes) - min(sizes)
    if mode == "variance":
        return float(np.var(sizes))
    raise ValueError(f"unknown load gap mode {mode!r}")


def weighted_objective(plan: BeamPlan, users: Sequence[GeoPoint], weights: tuple[float, float],
                       radius: float = EARTH_RADIUS_KM) -> float:
    """``w1 * sum of squared great-circle distances + w2 * beam count``."""
    w1, w2 = weights
    dist = 0.0
    if w1 != 0.0:
        for beam in plan.beams:
            dist += sum(great_circle_distance(users[k], beam.center, radius) ** 2 for k in beam.members)
    return w1 * dist + w2 * plan.n_beams


def evaluate(plan: BeamPlan, users: Sequence[GeoPoint], sat: SatellitePose, params: LinkBudgetParams,
             weights: tuple[float, float] = (0.5, 0.5), power_policy: PowerPolicy = equal_split_power,
             gap_mode: str = "range") -> EvaluationReport:
    """Per-user link metrics and plan-level summaries.

    Parameters
    ----------
    plan : BeamPlan
        Must cover every user exactly once.
    users : sequence of GeoPoint
    sat : SatellitePose
    params : LinkBudgetParams
    weights : (w1, w2)
        Non-negative, summing to one; used only by the objective.
    power_policy : callable
        Maps (total power dBW, beam sizes, beam index) to per-user dBW.

    Returns
    -------
    EvaluationReport
        ``avg_cnr_db`` is the arithmetic mean of per-user dB values.
    """
    w1, w2 = weights
    if w1 < 0 or w2 < 0 or not math.isclose(w1 + w2, 1.0, abs_tol=1e-12):
        raise ValueError(f"weights must be non-negative and sum to 1, got {weights}")
    try:
        plan.validate(len(users))
    except ValueError as exc:
        raise ValueError(f"plan does not serve the user set: {exc}") from None

    sizes = plan.sizes
    records = []
    for b, beam in enumerate(plan.beams):
        power = power_policy(params.total_power_dbw, sizes, b)
        for k in beam.members:
            theta = view_angle(sat, beam.center, users[k])
            m = link_metrics(theta, slant_range(sat, users[k]), power, params)
            records.append(UserRecord(k, b, theta, m.scgnr_db, m.cnr_db))
    records.sort(key=lambda r: r.user)
    cnrs = [r.cnr_db for r in records]
    return EvaluationReport(
        per_user=tuple(records),
        min_cnr_db=min(cnrs),
        avg_cnr_db=math.fsum(cnrs) / len(cnrs),
        load_gap=load_gap(plan, gap_mode),
        n_beams=plan.n_beams,
        objective=weighted_objective(plan, users, weights),
        cdf_points=tuple(sorted(r.scgnr_db for r in records)),
    )


def beam_aperture_baseline(users: Sequence[GeoPoint], sat: SatellitePose, half_beamwidth: float) -> BeamPlan:
    """Greedy sequential cover around seed users.

    The lowest-index unserved user seeds a beam that takes every unserved
    user within ``half_beamwidth`` of the seed. Members other than the seed
    may be up to twice that apart, which is recorded in ``plan.notes``.
    """
    if not users:
        raise ValueError("no users to serve")
    angles = view_angle_matrix(sat, users)
    unserved = list(range(len(users)))
    groups = []
    while unserved:
        seed = unserved[0]
        group = [k for k in unserved if k == seed or angles[seed, k] <= half_beamwidth]
        groups.append(group)
        unserved = [k for k in unserved if k not in group]
    plan = plan_from_partition(groups, users)
    wide = [
        beam.members for beam in plan.beams
        if len(beam.members) > 1 and angles[np.ix_(beam.members, beam.members)].max() > half_beamwidth
    ]
    if wide:
        notes = tuple(f"beam {m} spans more than the half beamwidth" for m in wide)
        plan = BeamPlan(plan.beams, notes)
    return plan


def homogeneous_balance_baseline(users: Sequence[GeoPoint], n_beams: int) -> BeamPlan:
    """Agglomerative grouping of nearest users down to ``n_beams`` groups.

    Repeatedly merges the two groups whose ECEF centroids are closest; an
    exact distance tie goes to the pair holding the smallest user index.
    """
    k = len(users)
    if not 1 <= n_beams <= k:
        raise ValueError(f"n_beams must lie in [1, {k}], got {n_beams}")
    points = ecef_array(users)
    groups: list[list[int]] = [[i] for i in range(k)]
    cents = [points[i].copy() for i in range(k)]
    while len(groups) > n_beams:
        best = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                d = float(np.sum((cents[i] - cents[j]) ** 2))
                key = (d, min(groups[i] + groups[j]))
                if best is None or key < best[0]:
                    best = (key, i, j)
        _, i, j = best
        merged = groups[i] + groups[j]
        cent = points[merged].mean(axis=0)
        groups = [g for n, g in enumerate(groups) if n not in (i, j)] + [merged]
        cents = [c for n, c in enumerate(cents) if n not in (i, j)] + [cent]
    return plan_from_partition(groups, users)

