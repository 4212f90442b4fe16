"""Joint beam placement and load balancing for multi-beam non-GSO satellites."""

from .balancer import BalancerConfig, RefineResult, refine
from .benchmarks import EvaluationReport, beam_aperture_baseline, evaluate, homogeneous_balance_baseline, load_gap
from .coverage_graph import BeamPlan, CoverageGraph, build_graph, stage_one
from .geometry import EARTH_RADIUS_KM, EcefVector, GeoPoint, SatellitePose
from .link_budget import LinkBudgetParams
from .scenario import ScenarioConfig, generate_users, run

__version__ = "0.1.0"
