"""Multi-agent non-uniform coverage: density sampling, optimal control,
weight transport and sharing, with scenario runs driven from JSON configs."""

from denscov._core import (
    ConfigError,
    SolveError,
    evaluate_density,
    grid_from_density,
    lti_control,
    model_matrices,
    run_scenario,
    sample_points,
    select_local_samples,
    step,
    unicycle_control,
    wasserstein2_exact,
    wasserstein2_sinkhorn,
    weight_update_plan,
)

__all__ = [
    "ConfigError",
    "SolveError",
    "evaluate_density",
    "grid_from_density",
    "lti_control",
    "model_matrices",
    "run_scenario",
    "sample_points",
    "select_local_samples",
    "step",
    "unicycle_control",
    "wasserstein2_exact",
    "wasserstein2_sinkhorn",
    "weight_update_plan",
]
