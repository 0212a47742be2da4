"""Attack planning for penetration tests under configuration uncertainty.

Single-machine attacks are modelled as small POMDPs with deterministic
action outcomes and solved exactly; whole-network attacks are composed
from them along a tree of biconnected network components.  A simulator
and a benchmark harness measure how close the composed plans come to the
(exponentially expensive) exact whole-network optimum.
"""

from .belief import (
    BeliefError,
    DependencyModel,
    MarkovChain,
    ProgramModel,
    condition,
    evolve_chain,
    initial_belief,
)
from .netmodel import (
    EMPTY_FIREWALL,
    Firewall,
    LogicalNetwork,
    Machine,
    MachineStatus,
    ScenarioError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    compute_status,
)
from .planner import (
    ComponentSizeError,
    DecompositionPlanner,
    NetworkPlan,
    PlannerError,
    decompose,
    plan_attack,
)
from .pomdp import (
    ActionSpec,
    ConfigState,
    MachinePOMDP,
    ModelError,
    RewardSpec,
    build_machine_pomdp,
    local_outcome,
)
from .report import format_plan, plan_from_yaml, plan_to_yaml
from .scenario import ScenarioSpec, emit_scenario, parse_scenario
from .sim import (
    GroundTruth,
    SimulationError,
    monte_carlo,
    monte_carlo_pomdp,
    rollout,
    sample_ground_truth,
)
from .solver import (
    PolicyNode,
    SolverError,
    SolveResult,
    brute_force_value,
    evaluate_policy,
    format_policy,
    parse_policy,
    solve,
)
from .bench import (
    BenchmarkParams,
    ResourceBoundError,
    build_global_pomdp,
    calibrate_chains,
    generate_benchmark,
    random_scenario,
    run_experiment,
    worked_example_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSpec",
    "BeliefError",
    "BenchmarkParams",
    "ComponentSizeError",
    "ConfigState",
    "DecompositionPlanner",
    "DependencyModel",
    "EMPTY_FIREWALL",
    "Firewall",
    "GroundTruth",
    "LogicalNetwork",
    "Machine",
    "MachinePOMDP",
    "MachineStatus",
    "MarkovChain",
    "ModelError",
    "NetworkPlan",
    "PlannerError",
    "PolicyNode",
    "ProgramModel",
    "ResourceBoundError",
    "RewardSpec",
    "ScenarioError",
    "ScenarioSpec",
    "ScenarioSyntaxError",
    "ScenarioValidationError",
    "SimulationError",
    "SolveResult",
    "SolverError",
    "brute_force_value",
    "build_global_pomdp",
    "build_machine_pomdp",
    "calibrate_chains",
    "compute_status",
    "condition",
    "decompose",
    "emit_scenario",
    "evaluate_policy",
    "evolve_chain",
    "format_plan",
    "format_policy",
    "generate_benchmark",
    "initial_belief",
    "local_outcome",
    "monte_carlo",
    "monte_carlo_pomdp",
    "parse_policy",
    "parse_scenario",
    "plan_attack",
    "plan_from_yaml",
    "plan_to_yaml",
    "random_scenario",
    "rollout",
    "run_experiment",
    "sample_ground_truth",
    "solve",
    "worked_example_scenario",
]
