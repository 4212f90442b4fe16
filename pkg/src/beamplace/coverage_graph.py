"""Stage 1: minimum number of beams via cliques of the coverage graph.

Two users are adjacent when the satellite sees them within the half
beamwidth of each other. Every beam must serve a clique, so the beam count is
minimized by packing large disjoint cliques first and filling the remaining
users with progressively smaller ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .geometry import (
    EARTH_RADIUS_KM,
    GeoPoint,
    SatellitePose,
    great_circle_distance,
    spherical_centroid,
    view_angle,
    view_angle_matrix,
)

log = logging.getLogger(__name__)

Clique = tuple[int, ...]
Candidate = tuple[Clique, ...]

DEFAULT_MAX_CANDIDATES = 64
DEFAULT_MAX_CLIQUE_SIZE = 12
_MAX_FAMILIES_PER_CANDIDATE = 10_000


@dataclass(frozen=True)
class CoverageGraph:
    """Boolean adjacency over users, with the view angles that induced it."""

    adjacency: np.ndarray
    angle_matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] == 0:
            raise ValueError("adjacency must be a non-empty square matrix")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if not adj.diagonal().all():
            raise ValueError("adjacency diagonal must be all true")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_adjacency(cls, matrix: Sequence[Sequence[int]]) -> "CoverageGraph":
        return cls(np.asarray(matrix, dtype=bool))

    @property
    def n_users(self) -> int:
        return self.adjacency.shape[0]

    def neighbours(self, k: int) -> set[int]:
        row = self.adjacency[k]
        return {int(j) for j in np.flatnonzero(row) if j != k}

    def is_clique(self, members: Iterable[int]) -> bool:
        idx = list(members)
        return bool(self.adjacency[np.ix_(idx, idx)].all())


@dataclass
class CliqueCatalog:
    """All cliques of the graph grouped by vertex count, lexicographically ordered."""

    by_size: dict[int, list[Clique]]
    n_users: int

    @property
    def max_size(self) -> int:
        return max((s for s, cl in self.by_size.items() if cl), default=0)


@dataclass(frozen=True)
class Beam:
    members: tuple[int, ...]
    center: GeoPoint


@dataclass(frozen=True)
class BeamPlan:
    """A partition of users into beams, each with a ground center."""

    beams: tuple[Beam, ...]
    notes: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n_beams(self) -> int:
        return len(self.beams)

    @property
    def sizes(self) -> list[int]:
        return [len(b.members) for b in self.beams]

    def assignment(self, n_users: int) -> np.ndarray:
        """User index to beam index; -1 for users the plan does not cover."""
        out = np.full(n_users, -1, dtype=int)
        for b, beam in enumerate(self.beams):
            out[list(beam.members)] = b
        return out

    def partition(self) -> Candidate:
        return tuple(b.members for b in self.beams)

    def validate(self, n_users: int, graph: CoverageGraph | None = None) -> None:
        """Raise ``ValueError`` unless the plan is a partition of all users.

        With ``graph`` given, also require every beam to be a clique.
        """
        seen: set[int] = set()
        for beam in self.beams:
            if not beam.members:
                raise ValueError("empty beam")
            overlap = seen.intersection(beam.members)
            if overlap:
                raise ValueError(f"users {sorted(overlap)} served by more than one beam")
            seen.update(beam.members)
        if seen != set(range(n_users)):
            missing = sorted(set(range(n_users)) - seen)
            extra = sorted(seen - set(range(n_users)))
            raise ValueError(f"plan does not cover users exactly (missing {missing}, unknown {extra})")
        if graph is not None:
            for beam in self.beams:
                if not graph.is_clique(beam.members):
                    raise ValueError(f"beam {beam.members} violates the pairwise beamwidth constraint")


def plan_from_partition(partition: Iterable[Iterable[int]], users: Sequence[GeoPoint]) -> BeamPlan:
    """Build a canonical plan (sorted beams) with centroid centers."""
    groups = sorted(tuple(sorted(int(k) for k in g)) for g in partition)
    beams = tuple(Beam(g, spherical_centroid([users[k] for k in g])) for g in groups)
    return BeamPlan(beams)


def build_graph(users: Sequence[GeoPoint], sat: SatellitePose, half_beamwidth: float) -> CoverageGraph:
    """Connect every pair of users at most ``half_beamwidth`` degrees apart."""
    if len(users) == 0:
        raise ValueError("cannot build a coverage graph without users")
    angles = view_angle_matrix(sat, users)
    adj = angles <= half_beamwidth
    np.fill_diagonal(adj, True)
    angles.setflags(write=False)
    return CoverageGraph(adj, angles)


def enumerate_cliques(g: CoverageGraph, max_clique_size: int | None = None) -> CliqueCatalog:
    """List every clique with up to ``max_clique_size`` vertices.

    Cliques are grown level by level by appending a higher-indexed common
    neighbour, which yields each clique exactly once in lexicographic order.
    When the cap is reached, the cap-sized cliques are extended greedily to
    maximal cliques so the catalog still reaches the largest groups.
    """
    k = g.n_users
    cap = min(k, DEFAULT_MAX_CLIQUE_SIZE) if max_clique_size is None else min(k, max_clique_size)
    if cap < 1:
        raise ValueError("max_clique_size must be at least 1")
    higher = [frozenset(j for j in g.neighbours(v) if j > v) for v in range(k)]

    level: list[tuple[Clique, frozenset[int]]] = [((v,), higher[v]) for v in range(k)]
    by_size: dict[int, list[Clique]] = {1: [c for c, _ in level]}
    size = 1
    while size < cap:
        nxt = []
        for clique, common in level:
            for v in sorted(common):
                nxt.append((clique + (v,), common & higher[v]))
        if not nxt:
            break
        size += 1
        by_size[size] = [c for c, _ in nxt]
        level = nxt

    if size == cap and cap < k:
        extended: set[Clique] = set()
        for clique, common in level:
            if not common:
                continue
            members = list(clique)
            pool = set(common)
            while pool:
                v = min(pool)
                members.append(v)
                pool &= higher[v]
            extended.add(tuple(sorted(members)))
        if extended:
            log.info("clique cap %d reached; %d greedy extensions added", cap, len(extended))
        for c in sorted(extended):
            by_size.setdefault(len(c), []).append(c)
    return CliqueCatalog(by_size, k)


def maximal_disjoint_families(cliques: Sequence[Clique], limit: int = _MAX_FAMILIES_PER_CANDIDATE) -> list[Candidate]:
    """Every maximal family of pairwise-disjoint cliques from ``cliques``.

    Families are maximal cliques of the "disjointness" graph, enumerated by
    Bron-Kerbosch with pivoting. Output is sorted; at most ``limit`` families
    are produced.
    """
    n = len(cliques)
    if n == 0:
        return []
    sets = [frozenset(c) for c in cliques]
    compatible = [frozenset(j for j in range(n) if j != i and sets[i].isdisjoint(sets[j])) for i in range(n)]
    found: list[Candidate] = []

    def expand(r: list[int], p: set[int], x: set[int]) -> None:
        if len(found) >= limit:
            return
        if not p and not x:
            found.append(tuple(sorted(cliques[i] for i in r)))
            return
        pivot = max(p | x, key=lambda u: (len(compatible[u] & p), -u))
        for v in sorted(p - compatible[pivot]):
            expand(r + [v], p & compatible[v], x & compatible[v])
            p = p - {v}
            x = x | {v}

    expand([], set(range(n)), set())
    if len(found) >= limit:
        log.warning("disjoint-family enumeration truncated at %d families", limit)
    return sorted(set(found))


def _covered(candidate: Candidate) -> set[int]:
    out: set[int] = set()
    for c in candidate:
        out.update(c)
    return out


def _prune(candidates: Iterable[Candidate], max_candidates: int) -> list[Candidate]:
    unique = {tuple(sorted(c)) for c in candidates}
    ranked = sorted(unique, key=lambda c: (-len(_covered(c)), c))
    return ranked[:max_candidates]


def expand_level(candidates: Sequence[Candidate], cliques: Sequence[Clique], n_users: int,
                 max_candidates: int = DEFAULT_MAX_CANDIDATES) -> list[Candidate]:
    """Extend each candidate with every maximal family of disjoint ``cliques``.

    Only cliques avoiding the users a candidate already serves are eligible.
    Complete candidates and candidates with nothing to add pass through.
    """
    out: list[Candidate] = []
    for cand in candidates:
        covered = _covered(cand)
        if len(covered) == n_users:
            out.append(cand)
            continue
        avail = [c for c in cliques if covered.isdisjoint(c)]
        families = maximal_disjoint_families(avail)
        if not families:
            out.append(cand)
            continue
        out.extend(cand + fam for fam in families)
    return _prune(out, max_candidates)


def expand_dictionary(catalog: CliqueCatalog, max_candidates: int = DEFAULT_MAX_CANDIDATES) -> list[Candidate]:
    """Grow candidate partitions from the largest cliques down to singletons.

    Returns complete partitions of all users, each a sorted tuple of cliques.
    """
    if not catalog.by_size:
        raise ValueError("empty clique catalog")
    n = catalog.n_users
    candidates: list[Candidate] = [()]
    for size in sorted(catalog.by_size, reverse=True):
        candidates = expand_level(candidates, catalog.by_size[size], n, max_candidates)
    padded = []
    for cand in candidates:
        missing = sorted(set(range(n)) - _covered(cand))
        padded.append(cand + tuple((k,) for k in missing))
    return _prune(padded, max_candidates)


def _sum_squared_distance(partition: Candidate, users: Sequence[GeoPoint], radius: float) -> float:
    total = 0.0
    for group in partition:
        center = spherical_centroid([users[k] for k in group])
        total += sum(great_circle_distance(users[k], center, radius) ** 2 for k in group)
    return total


def select_min_beams(candidates: Sequence[Candidate], users: Sequence[GeoPoint],
                     radius: float = EARTH_RADIUS_KM) -> BeamPlan:
    """Pick the candidate with fewest beams and place centers at centroids.

    Ties go to the smallest sum of squared user-to-center great-circle
    distances, then to the lexicographically smallest partition.
    """
    if not candidates:
        raise RuntimeError("no candidate partitions to select from")
    fewest = min(len(c) for c in candidates)
    best = [tuple(sorted(c)) for c in candidates if len(c) == fewest]
    if len(best) > 1:
        best.sort(key=lambda c: (_sum_squared_distance(c, users, radius), c))
    return plan_from_partition(best[0], users)


def theorem1_lower_bound(n_users: int) -> int:
    """Lower bound ``ceil(K / ceil((K - 1) / 2))`` on the beam count for a connected graph.

    Defined as 1 for fewer than two users.
    """
    if n_users < 2:
        return 1
    per_beam = math.ceil((n_users - 1) / 2)
    return math.ceil(n_users / per_beam)


def hpbw_audit(plan: BeamPlan, users: Sequence[GeoPoint], sat: SatellitePose, half_power_deg: float) -> list[str]:
    """Report members whose off-axis angle exceeds the half-power angle."""
    warnings = []
    for b, beam in enumerate(plan.beams):
        for k in beam.members:
            theta = view_angle(sat, beam.center, users[k])
            if theta > half_power_deg:
                warnings.append(f"beam {b} user {k}: {theta:.4f} deg exceeds half-power angle by {theta - half_power_deg:.4f}")
    for w in warnings:
        log.warning("HPBW audit: %s", w)
    return warnings


def stage_one(users: Sequence[GeoPoint], sat: SatellitePose, half_beamwidth: float,
              max_candidates: int = DEFAULT_MAX_CANDIDATES,
              max_clique_size: int | None = None) -> tuple[BeamPlan, CoverageGraph]:
    """Run graph construction, clique packing and selection in one call."""
    g = build_graph(users, sat, half_beamwidth)
    catalog = enumerate_cliques(g, max_clique_size)
    candidates = expand_dictionary(catalog, max_candidates)
    plan = select_min_beams(candidates, users)
    plan.validate(len(users), g)
    return plan, g


def iter_pairs(members: Sequence[int]) -> Iterator[tuple[int, int]]:
    for i, a in enumerate(members):
        for b in members[i + 1:]:
            yield a, b
