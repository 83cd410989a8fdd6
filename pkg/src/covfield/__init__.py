"""Covariance tensor fields on R^n, S^2 and H^2, similarity invariants of
SPD matrices, and recovery of pmfs from covariance sets."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChartOverflow,
    CovFieldError,
    CutLocus,
    DomainError,
    MismatchedBase,
    NoConvergence,
    NotSpd,
    RankDeficientWarning,
    SingularJacobian,
    ValidationError,
)
from .manifolds import (  # noqa: E402
    Euclidean,
    Hyperbolic2,
    Manifold,
    Sphere2,
    TangentVector,
    distance,
    exp_map,
    log_map,
    manifold_from_tag,
)
from .geodesic_ode import geodesic_ode, geodesic_ode_batch  # noqa: E402
from .tensors import (  # noqa: E402
    Chart,
    chart_jacobian,
    metric_at,
    transform_contravariant,
    transform_metric,
    transform_mixed,
    transform_operator,
    transform_vector,
)
from .spd import InvariantKind, invariant, numerical_rank, whiten_log  # noqa: E402
from .field import (  # noqa: E402
    UNIT,
    Amplitude,
    CovarianceTensor,
    Pmf,
    continuity_probe,
    covariance_at,
    halving_trajectory,
    intrinsic_mean,
    operator_quadratic_form,
    optimal_amplitude,
    trace_field,
    z_tensor,
)
from .simplex import project_simplex  # noqa: E402
from .recovery import (  # noqa: E402
    CovarianceSet,
    ObservationSet,
    RecoveryResult,
    SolverOptions,
    build_y_matrix,
    forward_covariance_set,
    objective,
    objective_gradient,
    objective_hessian,
    rank_diagnostic,
    recover_pmf,
)
from .experiments import (  # noqa: E402
    consistency_experiment,
    continuous_recovery,
    lipschitz_probe,
)

__all__ = [
    name for name, obj in list(globals().items())
    if not name.startswith("_") and not isinstance(obj, type(__import__("sys")))
]
