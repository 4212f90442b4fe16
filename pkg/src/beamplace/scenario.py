"""Scenario configuration, Monte-Carlo orchestration and result files."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .balancer import BalancerConfig, refine
from .benchmarks import beam_aperture_baseline, evaluate, homogeneous_balance_baseline
from .coverage_graph import BeamPlan, build_graph, enumerate_cliques, expand_dictionary, hpbw_audit, \
    select_min_beams, theorem1_lower_bound
from .geometry import GeoPoint, SatellitePose
from .link_budget import LinkBudgetParams, half_power_angle

log = logging.getLogger(__name__)

ALGORITHMS = ("two_stage", "stage1_only", "beam_aperture", "homo_balance")


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    n_users: tuple[int, ...] = (10,)
    lat_range: tuple[float, float] = (30.0, 40.0)
    lon_range: tuple[float, float] = (-120.0, -110.0)
    satellite: SatellitePose = SatellitePose(GeoPoint(0.0, -88.7), 8063.0)
    link: LinkBudgetParams = LinkBudgetParams()
    weights: tuple[float, float] = (0.5, 0.5)
    seed: int = 42
    n_trials: int = 200
    algorithms: tuple[str, ...] = ALGORITHMS
    max_beams: int | None = None
    balancer: BalancerConfig = BalancerConfig()
    max_candidates: int = 64
    max_clique_size: int | None = None
    gap_mode: str = "range"
    # Fixed user layout; replaces random generation when given.
    users: tuple[GeoPoint, ...] | None = None

    def __post_init__(self) -> None:
        if self.users is not None:
            if not self.users:
                raise ConfigError("users must not be empty")
            object.__setattr__(self, "n_users", (len(self.users),))
        if not self.n_users or any(k < 1 for k in self.n_users):
            raise ConfigError("n_users entries must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        w1, w2 = self.weights
        if w1 < 0 or w2 < 0 or not math.isclose(w1 + w2, 1.0, abs_tol=1e-12):
            raise ConfigError("weights must be non-negative and sum to 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"algorithms must be a non-empty subset of {ALGORITHMS}")
        lo, hi = self.lat_range
        if not -90 <= lo <= hi <= 90:
            raise ConfigError(f"bad lat_range {self.lat_range}")
        lo, hi = self.lon_range
        if not -180 <= lo <= hi <= 180:
            raise ConfigError(f"bad lon_range {self.lon_range}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.max_beams is not None and self.max_beams < 1:
            raise ConfigError("max_beams must be >= 1")
        if self.max_candidates < 1:
            raise ConfigError("max_candidates must be >= 1")
        if self.gap_mode not in ("range", "variance"):
            raise ConfigError("gap_mode must be 'range' or 'variance'")

    @property
    def half_beamwidth(self) -> float:
        return self.link.half_beamwidth_deg

    def to_dict(self) -> dict[str, Any]:
        """Canonical JSON-ready form, accepted back by ``from_dict``."""
        return {
            "n_users": list(self.n_users),
            "lat_range": list(self.lat_range),
            "lon_range": list(self.lon_range),
            "satellite": {
                "lat": self.satellite.position.lat,
                "lon": self.satellite.position.lon,
                "altitude_km": self.satellite.altitude,
            },
            "link": asdict(self.link),
            "weights": list(self.weights),
            "seed": self.seed,
            "n_trials": self.n_trials,
            "algorithms": list(self.algorithms),
            "max_beams": self.max_beams,
            "balancer": asdict(self.balancer),
            "max_candidates": self.max_candidates,
            "max_clique_size": self.max_clique_size,
            "gap_mode": self.gap_mode,
            "users": None if self.users is None else [[p.lat, p.lon] for p in self.users],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        kw: dict[str, Any] = {}
        try:
            for key, value in data.items():
                if value is None and key in ("max_beams", "max_clique_size", "users"):
                    kw[key] = None
                elif key == "n_users":
                    kw[key] = tuple(int(v) for v in (value if isinstance(value, list) else [value]))
                elif key in ("lat_range", "lon_range", "weights"):
                    if len(value) != 2:
                        raise ConfigError(f"{key} needs exactly two numbers")
                    kw[key] = (float(value[0]), float(value[1]))
                elif key == "satellite":
                    _check_keys("satellite", value, {"lat", "lon", "altitude_km"})
                    kw[key] = SatellitePose(GeoPoint(float(value.get("lat", 0.0)), float(value.get("lon", -88.7))),
                                            float(value.get("altitude_km", 8063.0)))
                elif key == "link":
                    _check_keys("link", value, {f.name for f in fields(LinkBudgetParams)})
                    kw[key] = LinkBudgetParams(**{k: float(v) for k, v in value.items()})
                elif key == "balancer":
                    _check_keys("balancer", value, {f.name for f in fields(BalancerConfig)})
                    kw[key] = BalancerConfig(**{k: int(v) for k, v in value.items()})
                elif key == "algorithms":
                    kw[key] = tuple(str(a) for a in value)
                elif key == "users":
                    kw[key] = tuple(GeoPoint(float(a), float(b)) for a, b in value)
                elif key == "gap_mode":
                    kw[key] = str(value)
                else:
                    kw[key] = int(value)
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(str(exc)) from exc


def _check_keys(section: str, value: Any, allowed: set[str]) -> None:
    if not isinstance(value, dict):
        raise ConfigError(f"{section} must be a mapping")
    extra = set(value) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {section}: {sorted(extra)}")


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a YAML or JSON scenario file.

    ``OSError`` propagates for unreadable files; parse and schema problems
    raise ``ConfigError``.
    """
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ScenarioConfig.from_dict(data or {})


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # Philox is counter-based, so every (seed, trial) stream is independent.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def generate_users(cfg: ScenarioConfig, trial: int, n_users: int | None = None) -> list[GeoPoint]:
    """Users drawn i.i.d. uniform in the configured lat/lon rectangle.

    The stream depends only on ``(cfg.seed, trial)``; a larger ``n_users``
    extends the same draw rather than replacing it.
    """
    if cfg.users is not None:
        return list(cfg.users)
    n = cfg.n_users[0] if n_users is None else n_users
    if n < 1:
        raise ValueError("n_users must be >= 1")
    (lat0, lat1), (lon0, lon1) = cfg.lat_range, cfg.lon_range
    if lat0 > lat1 or lon0 > lon1:
        raise ValueError("degenerate sampling rectangle")
    u = _trial_rng(cfg.seed, trial).random((n, 2))
    lat = lat0 + (lat1 - lat0) * u[:, 0]
    lon = lon0 + (lon1 - lon0) * u[:, 1]
    return [GeoPoint(float(a), float(b)) for a, b in zip(lat, lon)]


def _plan_record(plan: BeamPlan, report) -> dict[str, Any]:
    return {
        "n_beams": plan.n_beams,
        "load_gap": report.load_gap,
        "min_cnr_db": report.min_cnr_db,
        "avg_cnr_db": report.avg_cnr_db,
        "objective": report.objective,
        "beams": [{"members": list(b.members), "center": [b.center.lat, b.center.lon]} for b in plan.beams],
        "per_user": [[r.user, r.beam, r.theta_deg, r.scgnr_db, r.cnr_db] for r in report.per_user],
        "notes": list(plan.notes),
    }


def run_trial(cfg: ScenarioConfig, n_users: int, trial: int) -> dict[str, Any]:
    """Run every enabled algorithm on one user draw."""
    users = generate_users(cfg, trial, n_users)
    sat, params = cfg.satellite, cfg.link
    k = len(users)
    out: dict[str, Any] = {"K": k, "trial": trial, "users": [[p.lat, p.lon] for p in users],
                           "beam_lower_bound": theorem1_lower_bound(k), "results": {}}

    g = build_graph(users, sat, cfg.half_beamwidth)
    catalog = enumerate_cliques(g, cfg.max_clique_size)
    stage1 = select_min_beams(expand_dictionary(catalog, cfg.max_candidates), users)
    stage1.validate(k, g)
    try:
        hp = half_power_angle(params)
    except ValueError:
        hp = None

    plans: dict[str, tuple[BeamPlan, dict[str, Any]]] = {}
    for alg in cfg.algorithms:
        extra: dict[str, Any] = {}
        if alg == "stage1_only":
            plan = stage1
        elif alg == "two_stage":
            res = refine(stage1, users, g, cfg.balancer)
            plan = res.plan
            extra = {
                "fallback": res.fallback,
                "accepted_restart": res.accepted_restart,
                "inertia_km2": res.inertia,
                "stage1_inertia_km2": res.stage1_inertia,
                "restarts": [{"restart": r.restart, "feasible": r.feasible, "violations": r.n_violations,
                              "inertia_history": r.inertia_history} for r in res.restarts],
            }
        elif alg == "beam_aperture":
            plan = beam_aperture_baseline(users, sat, cfg.half_beamwidth)
        else:
            plan = homogeneous_balance_baseline(users, stage1.n_beams)
        plan.validate(k, g if alg in ("two_stage", "stage1_only") else None)
        if alg in ("two_stage", "stage1_only") and hp is not None:
            extra["hpbw_audit"] = hpbw_audit(plan, users, sat, hp)
        plans[alg] = (plan, extra)

    for alg, (plan, extra) in plans.items():
        report = evaluate(plan, users, sat, params, cfg.weights, gap_mode=cfg.gap_mode)
        record = _plan_record(plan, report)
        record.update(extra)
        out["results"][alg] = record
    return out


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def aggregate(cfg: ScenarioConfig, trials: Sequence[dict[str, Any]]) -> dict[str, Any]:
    """Table, CDF and load-gap series as pure functions of the trial records."""
    summary = []
    cdf: dict[str, dict[str, list[float]]] = {}
    series: dict[str, list[list[float]]] = {}
    violations = []
    for alg in cfg.algorithms:
        cdf[alg] = {}
        series[alg] = []
        for k in cfg.n_users:
            recs = [t["results"][alg] for t in trials if t["K"] == k]
            row = {
                "algorithm": alg,
                "K": k,
                "min_cnr_db": _mean([r["min_cnr_db"] for r in recs]),
                "avg_cnr_db": _mean([r["avg_cnr_db"] for r in recs]),
                "avg_load_gap": _mean([r["load_gap"] for r in recs]),
                "avg_n_beams": _mean([r["n_beams"] for r in recs]),
            }
            if alg == "two_stage":
                row["fallback_rate"] = _mean([1.0 if r["fallback"] else 0.0 for r in recs])
            summary.append(row)
            cdf[alg][str(k)] = sorted(u[3] for r in recs for u in r["per_user"])
            series[alg].append([k, row["avg_load_gap"]])
    if cfg.max_beams is not None:
        for t in trials:
            for alg, r in t["results"].items():
                if r["n_beams"] > cfg.max_beams:
                    violations.append({"K": t["K"], "trial": t["trial"], "algorithm": alg,
                                       "n_beams": r["n_beams"], "max_beams": cfg.max_beams})
    return {"summary": summary, "cdf": cdf, "load_gap_series": series, "violations": violations}


def _trial_task(args: tuple[ScenarioConfig, int, int]) -> dict[str, Any]:
    return run_trial(*args)


def run(cfg: ScenarioConfig, workers: int = 1) -> dict[str, Any]:
    """Execute every (K, trial) pair and assemble the run document.

    Trials may run in parallel; records are folded in (K, trial) order so
    the document is identical for any worker count.
    """
    n_trials = 1 if cfg.users is not None else cfg.n_trials
    tasks = [(cfg, k, t) for k in cfg.n_users for t in range(n_trials)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        trials = [_trial_task(t) for t in tasks]
    doc = {"generated_at": datetime.now(timezone.utc).isoformat(), "config": cfg.to_dict()}
    doc.update(aggregate(cfg, trials))
    doc["trials"] = trials
    return doc


def write_outputs(doc: dict[str, Any], out_dir: str | Path) -> list[Path]:
    """Write run.json, per_user.csv, summary.csv and one cdf_<algorithm>.csv each."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "run.json"
    path.write_text(json.dumps(doc, indent=1) + "\n")
    written.append(path)

    path = out / "per_user.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "algorithm", "user", "beam", "theta_deg", "scgnr_db", "cnr_db", "K"])
        for t in doc["trials"]:
            for alg, r in t["results"].items():
                for user, beam, theta, scgnr_db, cnr_db in r["per_user"]:
                    w.writerow([t["trial"], alg, user, beam, repr(theta), repr(scgnr_db), repr(cnr_db), t["K"]])
    written.append(path)

    path = out / "summary.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["algorithm", "K", "min_cnr_db", "avg_cnr_db", "avg_load_gap", "avg_n_beams"]
        w.writerow(cols)
        for row in doc["summary"]:
            w.writerow([row[c] if isinstance(row[c], (str, int)) else repr(row[c]) for c in cols])
    written.append(path)

    for alg, by_k in doc["cdf"].items():
        path = out / f"cdf_{alg}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["K", "scgnr_db", "cdf"])
            for k, values in by_k.items():
                n = len(values)
                for i, v in enumerate(values, 1):
                    w.writerow([k, repr(v), repr(i / n)])
        written.append(path)
    return written


def load_example1() -> dict[str, Any]:
    """The pinned 10-user layout realizing the toy-example adjacency matrix."""
    text = resources.files("beamplace").joinpath("data/example1.json").read_text()
    return json.loads(text)


def example1_config(**overrides: Any) -> ScenarioConfig:
    data = load_example1()
    sat = data["satellite"]
    cfg = ScenarioConfig(
        users=tuple(GeoPoint(a, b) for a, b in data["users"]),
        satellite=SatellitePose(GeoPoint(sat["lat"], sat["lon"]), sat["altitude_km"]),
        link=replace(LinkBudgetParams(), half_beamwidth_deg=data["half_beamwidth_deg"]),
        n_trials=1,
    )
    return replace(cfg, **overrides) if overrides else cfg


__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "ScenarioConfig",
    "aggregate",
    "example1_config",
    "generate_users",
    "load_config",
    "load_example1",
    "run",
    "run_trial",
    "write_outputs",
]
