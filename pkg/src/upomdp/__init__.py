"""Robust finite-memory policy synthesis for POMDPs whose transition
probabilities are only known up to intervals.

The pipeline: fold controller memory into the model (``memory_product``),
rewrite to binary simple form (``to_simple``), dualize the per-state
uncertainty polytopes (``dual_constraints``), then alternate convexified
policy LPs with exact robust value iteration (``scp_solve``).  Candidate
policies are only ever reported with values confirmed by the exact check.
"""

__version__ = "0.1.0"

from .model import (
    MAXIMIZE,
    MINIMIZE,
    Interval,
    IntervalMC,
    Policy,
    SpecThreshold,
    UPomdp,
    Violation,
    induce_imc,
    instantiate,
    nominal,
    uniform_policy,
    validate,
    validate_policy,
)
from .ingest import (
    UpmError,
    parse_model,
    parse_policy,
    write_model,
    write_policy,
)
from .transform import (
    Fsc,
    MemoryProduct,
    ObsDeterminized,
    SimpleForm,
    determinize_observations,
    map_policy_back,
    memory_product,
    product_policy_to_fsc,
    simple_policy_to_source,
    source_policy_to_simple,
    to_simple,
)
from .robustcheck import (
    COMPILED_KERNELS,
    RobustResult,
    brute_force_robust_value,
    exact_point_values,
    grid_search_policy,
    inner_opt,
    robust_value_iteration,
)
from .dualize import (
    DualBlock,
    DualSystem,
    StatePolytope,
    build_polytope,
    dual_constraints,
    value_bound_lp,
)
from .lp import LinearProgram, LpSolution, solve_lp, write_lp_text
from .scp import (
    LinearizationPoint,
    LinearizedProduct,
    ScpConfig,
    ScpResult,
    ScpTrace,
    build_scp_lp,
    linearize_h,
    scp_solve,
)
from .generators import (
    AircraftParams,
    SpacecraftParams,
    gen_aircraft,
    gen_spacecraft,
)

__all__ = [
    "__version__",
    "MAXIMIZE",
    "MINIMIZE",
    "Interval",
    "IntervalMC",
    "Policy",
    "SpecThreshold",
    "UPomdp",
    "Violation",
    "induce_imc",
    "instantiate",
    "nominal",
    "uniform_policy",
    "validate",
    "validate_policy",
    "UpmError",
    "parse_model",
    "parse_policy",
    "write_model",
    "write_policy",
    "Fsc",
    "MemoryProduct",
    "ObsDeterminized",
    "SimpleForm",
    "determinize_observations",
    "map_policy_back",
    "memory_product",
    "product_policy_to_fsc",
    "simple_policy_to_source",
    "source_policy_to_simple",
    "to_simple",
    "COMPILED_KERNELS",
    "RobustResult",
    "brute_force_robust_value",
    "exact_point_values",
    "grid_search_policy",
    "inner_opt",
    "robust_value_iteration",
    "DualBlock",
    "DualSystem",
    "StatePolytope",
    "build_polytope",
    "dual_constraints",
    "value_bound_lp",
    "LinearProgram",
    "LpSolution",
    "solve_lp",
    "write_lp_text",
    "LinearizationPoint",
    "LinearizedProduct",
    "ScpConfig",
    "ScpResult",
    "ScpTrace",
    "build_scp_lp",
    "linearize_h",
    "scp_solve",
    "SpacecraftParams",
    "AircraftParams",
    "gen_aircraft",
    "gen_spacecraft",
]
