"""Low-attitude-disturbance trajectory planning for a free-floating
spacecraft manipulator: momentum-conserving model and dynamics, LQR
demonstration generation, probabilistic movement primitives, and
minimum-disturbance trajectory selection."""

__version__ = "0.1.0"

from .errors import OrbitPrompError
from .model import (
    DHRow,
    FKResult,
    InducedMotion,
    LinkInertial,
    LinkMotion,
    REFERENCE_HOME,
    RobotModel,
    SystemState,
    coupling_inertias,
    forward_kinematics,
    generalized_jacobian,
    induced_motion,
    jacobians,
    link_motion,
    load_model,
    load_model_file,
    reference_model,
    resolved_rate_ik,
    rest_state,
    spacecraft_rates,
    system_com_spacecraft_position,
)
from .dynamics import (
    DynamicsTerms,
    GeneralizedCoords,
    SimulationResult,
    coriolis_vector,
    dynamics_terms,
    forward_dynamics,
    kinetic_energy,
    mass_matrix,
    simulate,
)
from .demos import (
    JointTrajectory,
    LQRSetup,
    TrajectoryDataset,
    default_lqr_setup,
    discretize_double_integrator,
    elastic_band_perturb,
    generate_dataset,
    generate_demo,
    load_dataset,
    load_demo,
    riccati_backward,
    save_dataset,
    save_demo,
)
from .promp import (
    BasisConfig,
    ProMPModel,
    basis_row,
    condition,
    fit_promp,
    fit_weights,
    load_promp,
    marginal,
    mean_trajectory,
    sample_trajectories,
    save_promp,
)
from .planner import (
    CostConfig,
    PlanResult,
    SpacecraftLog,
    export_plan,
    plan,
    trajectory_cost,
)

__all__ = [
    "BasisConfig",
    "CostConfig",
    "DHRow",
    "DynamicsTerms",
    "FKResult",
    "GeneralizedCoords",
    "InducedMotion",
    "JointTrajectory",
    "LQRSetup",
    "LinkInertial",
    "LinkMotion",
    "OrbitPrompError",
    "PlanResult",
    "ProMPModel",
    "REFERENCE_HOME",
    "RobotModel",
    "SimulationResult",
    "SpacecraftLog",
    "SystemState",
    "TrajectoryDataset",
    "__version__",
    "basis_row",
    "condition",
    "coriolis_vector",
    "coupling_inertias",
    "default_lqr_setup",
    "discretize_double_integrator",
    "dynamics_terms",
    "elastic_band_perturb",
    "export_plan",
    "fit_promp",
    "fit_weights",
    "forward_dynamics",
    "forward_kinematics",
    "generalized_jacobian",
    "generate_dataset",
    "generate_demo",
    "induced_motion",
    "jacobians",
    "kinetic_energy",
    "link_motion",
    "load_dataset",
    "load_demo",
    "load_model",
    "load_model_file",
    "load_promp",
    "marginal",
    "mass_matrix",
    "mean_trajectory",
    "plan",
    "reference_model",
    "resolved_rate_ik",
    "rest_state",
    "riccati_backward",
    "sample_trajectories",
    "save_dataset",
    "save_demo",
    "save_promp",
    "simulate",
    "spacecraft_rates",
    "system_com_spacecraft_position",
    "trajectory_cost",
]
