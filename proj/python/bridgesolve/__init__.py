"""Bridge diffusion sampler with exponential-integrator steps."""

from ._core import (
    ConfigError,
    DomainError,
    Schedule,
    SingularityError,
    UnsupportedOrderError,
    exp_integral,
    nfe_for_steps,
    ode_step_k1,
    pf_ode_rhs,
    quadrature_oracle,
    run_cli,
    sample,
    semilinear_split,
    sliced_wasserstein,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Schedule",
    "SingularityError",
    "UnsupportedOrderError",
    "exp_integral",
    "nfe_for_steps",
    "ode_step_k1",
    "pf_ode_rhs",
    "quadrature_oracle",
    "run_cli",
    "sample",
    "semilinear_split",
    "sliced_wasserstein",
]
