"""Multi-robot target assignment under limited communication range.

Deterministic simulators for three assignment strategies (a centralized
rendezvous-based one, a decentralized shared-tour one with cooperative
reassignment, and a greedy baseline), spanning-tree lower bounds, a
marker-gene genetic assignment solver, and a Monte Carlo sweep harness.
"""

__version__ = "0.1.0"

from .cmga import Assignment, AssignmentProblem, GaConfig, brute_force_mvrp, solve
from .connectivity import (
    ConnectivityGraph,
    algebraic_connectivity,
    build_graph,
    components,
    critical_radius,
    epsilon_for_probability,
    is_connected,
)
from .core import (
    Event,
    Point2D,
    Scenario,
    SimResult,
    VisitRecord,
    center_of_gravity,
    distance,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .engine import (
    InvariantViolation,
    NonTermination,
    SimConfig,
    run,
    run_greedy,
    run_rba,
    run_ststc,
)
from .harness import (
    AggregateRow,
    ExperimentPlan,
    RunRecord,
    Witness,
    find_nonmonotone_witness,
    quality,
    run_experiment,
)
from .tours import (
    Route,
    Tour,
    brute_force_tsp,
    christofides,
    distance_matrix,
    f_mst_bound,
    initial_route_on_tour,
    min_weight_perfect_matching,
    mst_weight,
    route_length,
)

__all__ = [
    "__version__",
    "Assignment",
    "AssignmentProblem",
    "GaConfig",
    "brute_force_mvrp",
    "solve",
    "ConnectivityGraph",
    "algebraic_connectivity",
    "build_graph",
    "components",
    "critical_radius",
    "epsilon_for_probability",
    "is_connected",
    "Event",
    "Point2D",
    "Scenario",
    "SimResult",
    "VisitRecord",
    "center_of_gravity",
    "distance",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
    "InvariantViolation",
    "NonTermination",
    "SimConfig",
    "run",
    "run_greedy",
    "run_rba",
    "run_ststc",
    "AggregateRow",
    "ExperimentPlan",
    "RunRecord",
    "Witness",
    "find_nonmonotone_witness",
    "quality",
    "run_experiment",
    "Route",
    "Tour",
    "brute_force_tsp",
    "christofides",
    "distance_matrix",
    "f_mst_bound",
    "initial_route_on_tour",
    "min_weight_perfect_matching",
    "mst_weight",
    "route_length",
]
