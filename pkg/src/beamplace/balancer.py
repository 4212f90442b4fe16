"""Stage 2: K-means refinement of the Stage-1 partition in ECEF coordinates.

The beam count is fixed to the Stage-1 value. Lloyd iterations are restarted
(warm start first, then seeded k-means++) until a clustering is found whose
beams are all cliques of the coverage graph. Among feasible restarts the one
with least within-beam squared distance wins, provided it does not exceed the
Stage-1 value; otherwise the Stage-1 plan is returned and flagged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coverage_graph import BeamPlan, CoverageGraph, plan_from_partition
from .geometry import GeoPoint, ecef_array

log = logging.getLogger(__name__)

# Relative slack when comparing inertias computed along different paths.
_INERTIA_RTOL = 1e-12


@dataclass(frozen=True)
class BalancerConfig:
    restarts: int = 20
    max_iterations: int = 300
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class KMeansState:
    centroids: np.ndarray  # (B, 3) km
    assignment: np.ndarray  # (K,) beam index per user, -1 before the first step
    iteration: int = 0
    inertia: float = float("inf")


@dataclass
class RestartLog:
    restart: int
    inertia_history: list[float]
    feasible: bool
    n_violations: int


@dataclass
class RefineResult:
    plan: BeamPlan
    fallback: bool
    inertia: float
    stage1_inertia: float
    accepted_restart: int | None
    restarts: list[RestartLog] = field(default_factory=list)


def inertia_of(points: np.ndarray, assignment: np.ndarray, centroids: np.ndarray) -> float:
    diff = points - centroids[assignment]
    return float(np.einsum("ij,ij->", diff, diff))


def _means(points: np.ndarray, assignment: np.ndarray, n_clusters: int) -> np.ndarray:
    sums = np.zeros((n_clusters, points.shape[1]))
    np.add.at(sums, assignment, points)
    counts = np.bincount(assignment, minlength=n_clusters)
    return sums / counts[:, None]


def _repair_empty(points: np.ndarray, assignment: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Move the farthest point of a multi-member cluster into each empty cluster."""
    n_clusters = len(centroids)
    assignment = assignment.copy()
    while True:
        counts = np.bincount(assignment, minlength=n_clusters)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return assignment
        dist = np.sum((points - centroids[assignment]) ** 2, axis=1)
        dist[counts[assignment] < 2] = -1.0
        donor = int(np.argmax(dist))
        assignment[donor] = int(empty[0])
        centroids = centroids.copy()
        centroids[empty[0]] = points[donor]


def lloyd_step(state: KMeansState, points: np.ndarray) -> KMeansState:
    """One assignment + update pass.

    Ties in the assignment go to the lowest cluster index.
    """
    centroids = state.centroids
    n_clusters = len(centroids)
    if len(points) < n_clusters:
        raise ValueError("fewer points than clusters")
    d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    assignment = np.argmin(d2, axis=1)
    assignment = _repair_empty(points, assignment, centroids)
    new_centroids = _means(points, assignment, n_clusters)
    return KMeansState(new_centroids, assignment, state.iteration + 1, inertia_of(points, assignment, new_centroids))


def kmeans_plus_plus(points: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    k = len(points)
    idx = [int(rng.integers(k))]
    d2 = np.sum((points - points[idx[0]]) ** 2, axis=1)
    for _ in range(1, n_clusters):
        total = d2.sum()
        if total <= 0.0:
            nxt = int(rng.integers(k))
        else:
            nxt = int(rng.choice(k, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[idx].copy()


def run_lloyd(points: np.ndarray, centroids: np.ndarray, max_iterations: int) -> tuple[KMeansState, list[float]]:
    """Iterate until the assignment stops changing or the budget runs out."""
    state = KMeansState(np.asarray(centroids, dtype=float), np.full(len(points), -1))
    history: list[float] = []
    for _ in range(max_iterations):
        nxt = lloyd_step(state, points)
        if history and nxt.inertia > history[-1] * (1 + _INERTIA_RTOL) + 1e-9:
            raise AssertionError(f"inertia increased from {history[-1]} to {nxt.inertia}")
        history.append(nxt.inertia)
        converged = np.array_equal(nxt.assignment, state.assignment)
        state = nxt
        if converged:
            break
    return state, history


def feasibility_check(assignment: Sequence[int], g: CoverageGraph) -> list[tuple[int, int]]:
    """Same-beam user pairs that are not adjacent in the coverage graph."""
    assignment = np.asarray(assignment)
    same = assignment[:, None] == assignment[None, :]
    bad = np.argwhere(np.triu(same & ~g.adjacency, k=1))
    return [(int(a), int(b)) for a, b in bad]


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, restart])))


def refine(plan: BeamPlan, users: Sequence[GeoPoint], g: CoverageGraph,
           config: BalancerConfig | None = None) -> RefineResult:
    """Rebalance users over the Stage-1 beams with constrained K-means restarts."""
    config = config or BalancerConfig()
    k = len(users)
    if g.n_users != k:
        raise ValueError(f"graph has {g.n_users} users but {k} were given")
    plan.validate(k)
    points = ecef_array(users)
    n_beams = plan.n_beams
    stage1_assign = plan.assignment(k)
    stage1_centroids = _means(points, stage1_assign, n_beams)
    stage1_inertia = inertia_of(points, stage1_assign, stage1_centroids)

    logs: list[RestartLog] = []
    best: tuple[float, int, np.ndarray] | None = None
    for r in range(config.restarts):
        if r == 0:
            init = stage1_centroids
        else:
            init = kmeans_plus_plus(points, n_beams, _restart_rng(config.seed, r))
        state, history = run_lloyd(points, init, config.max_iterations)
        violations = feasibility_check(state.assignment, g)
        feasible = not violations
        logs.append(RestartLog(r, history, feasible, len(violations)))
        if not feasible:
            continue
        if state.inertia > stage1_inertia * (1 + _INERTIA_RTOL) + 1e-9:
            continue
        if best is None or state.inertia < best[0]:
            best = (state.inertia, r, state.assignment)

    if best is None:
        log.info("no feasible refinement in %d restarts; keeping Stage-1 plan", config.restarts)
        return RefineResult(plan, True, stage1_inertia, stage1_inertia, None, logs)

    inertia, restart, assignment = best
    groups = [np.flatnonzero(assignment == b).tolist() for b in range(n_beams)]
    refined = plan_from_partition(groups, users)
    refined.validate(k, g)
    return RefineResult(refined, False, inertia, stage1_inertia, restart, logs)
