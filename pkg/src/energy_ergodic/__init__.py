"""Energy-aware multi-agent ergodic search.

Plans exploration trajectories that match a Gaussian-mixture information
map under a spectral ergodic metric, while a battery equivalent-circuit
model decides which agents fly in each receding horizon.
"""
from .battery import (BatteryParams, BatteryState, Depleted, FitDiverged, identify_parameters,
                      predict_flight_feasible, propagate, recharge, terminal_voltage)
from .dynamics import ControlOutOfBounds, ControlSequence, DynamicsModel, control_effort, rollout, step
from .ergodic import (ErgodicEvaluation, IndexSetMismatch, Trajectory, TrajectoryCoefficients, basis_at,
                      evaluate, metric_multi, metric_single, mirrored_coefficients, prefix_metrics,
                      reconstruct_time_average, trajectory_coefficients)
from .mission import (ContinuityBroken, MissionConfig, MissionLog, MissionRecord, SwapPolicy,
                      instantaneous_ergodicity, run_mission)
from .solver import (AT_LEAST_ONE, AgentSpec, BudgetExceeded, Cardinality, ErgodicityUnreachable,
                     HorizonPlan, Infeasible, Mode, NoFeasibleAgent, OcpProblem, PlanningError,
                     SolverSettings, check_plan, enumerate_active_subsets, exactly, solve_continuous,
                     solve_horizon)
from .spatial import (FourierIndexSet, GaussianComponent, NotSPDError, SpatialDistribution, SpectralBasis,
                      build_index_set, distribution_coefficients, evaluate_density, make_basis, symmetrize,
                      weight)

__all__ = [
    "AgentSpec",
    "AT_LEAST_ONE",
    "basis_at",
    "BatteryParams",
    "BatteryState",
    "BudgetExceeded",
    "build_index_set",
    "Cardinality",
    "check_plan",
    "ContinuityBroken",
    "control_effort",
    "ControlOutOfBounds",
    "ControlSequence",
    "Depleted",
    "distribution_coefficients",
    "DynamicsModel",
    "enumerate_active_subsets",
    "ErgodicEvaluation",
    "ErgodicityUnreachable",
    "evaluate",
    "evaluate_density",
    "exactly",
    "FitDiverged",
    "FourierIndexSet",
    "GaussianComponent",
    "HorizonPlan",
    "identify_parameters",
    "IndexSetMismatch",
    "Infeasible",
    "instantaneous_ergodicity",
    "make_basis",
    "metric_multi",
    "metric_single",
    "mirrored_coefficients",
    "MissionConfig",
    "MissionLog",
    "MissionRecord",
    "Mode",
    "NoFeasibleAgent",
    "NotSPDError",
    "OcpProblem",
    "PlanningError",
    "predict_flight_feasible",
    "prefix_metrics",
    "propagate",
    "recharge",
    "reconstruct_time_average",
    "rollout",
    "run_mission",
    "solve_continuous",
    "solve_horizon",
    "SolverSettings",
    "SpatialDistribution",
    "SpectralBasis",
    "step",
    "SwapPolicy",
    "symmetrize",
    "terminal_voltage",
    "Trajectory",
    "trajectory_coefficients",
    "TrajectoryCoefficients",
    "weight",
]

__version__ = "0.1.0"
