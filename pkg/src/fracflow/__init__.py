"""Simulation and verification harness for the fractional p-Laplacian gradient flow on 1-D domains."""

__version__ = "0.1.0"

from .pointwise import (  # noqa: E402
    Exponents,
    IneqVerdict,
    RegimeError,
    jp,
    jp_truncated,
    truncate,
)
from .mesh import Exterior, Field, Grid, KernelWeights, build_grid, build_kernel, restrict_and_extend  # noqa: E402
from .operators import apply_operator, energy, linf_norm, lp_norm, seminorm, seminorm_p  # noqa: E402
from .flow import (  # noqa: E402
    SolverConfig,
    Trajectory,
    eigenprofile,
    exponential_subsolution,
    run,
    run_pair,
    separated_solution,
    step_explicit,
    step_implicit,
)
from .analysis import (  # noqa: E402
    DecayReport,
    comparison_verdict,
    detect_extinction,
    embedding_constant_probe,
    fit_exponential,
    fit_power,
    theorem2_constants,
)
