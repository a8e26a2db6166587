"""Exception types raised across the package."""


class OrbitPrompError(Exception):
    """Base class for all package errors."""


class ModelSchemaError(OrbitPrompError):
    """Model config document has missing/extra sections or rows."""


class ModelValidationError(OrbitPrompError):
    """Model config values violate an invariant (sign, triangle inequality...)."""


class AttitudeSingularityError(OrbitPrompError):
    """Spacecraft pitch within 1e-3 rad of the +-pi/2 Euler singularity."""


class NearSingularityError(OrbitPrompError):
    """Coupling inertia I_s numerically singular (condition number > 1e12)."""


class DynamicsSingularityError(OrbitPrompError):
    """Mass matrix not solvable."""


class IntegrationFailureError(OrbitPrompError):
    """Simulation produced NaN or diverged; reports the failing step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnreachableTargetError(OrbitPrompError):
    """IK failed to converge; carries the final residuals."""

    def __init__(self, message, position_residual=None, orientation_residual=None):
        super().__init__(message)
        self.position_residual = position_residual
        self.orientation_residual = orientation_residual


class CostDegeneracyError(OrbitPrompError):
    """R + B^T P B singular in the Riccati recursion."""


class RolloutDivergenceError(OrbitPrompError):
    """Closed-loop rollout state norm exceeded the divergence bound."""


class DeformationFailureError(OrbitPrompError):
    """Elastic-band deformation still penetrating after the iteration cap."""


class DemoGenerationError(OrbitPrompError):
    """A demo could not be produced within the retry budget."""


class InsufficientDataError(OrbitPrompError):
    """Fewer demonstrations than the estimator requires."""


class ParameterError(OrbitPrompError):
    """Invalid parameter value (non-positive ridge, bad shapes...)."""


class PhaseDomainError(OrbitPrompError):
    """Time outside the [0, duration] domain of the basis."""


class ConditioningSingularityError(OrbitPrompError):
    """(Sigma* + Psi Sigma_w Psi^T) numerically singular."""


class CostPropagationError(OrbitPrompError):
    """Attitude propagation failed while evaluating a trajectory cost."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PlanningFailureError(OrbitPrompError):
    """No sampled trajectory produced a finite cost."""


class NonEmptyOutputError(OrbitPrompError):
    """Output directory already holds files and overwrite was not requested."""


class ManifestError(OrbitPrompError):
    """Manifest missing, unreadable, or hash-inconsistent."""
