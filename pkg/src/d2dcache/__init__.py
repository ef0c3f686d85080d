"""Device-to-device coded caching with unequal cache sizes.

Exact-rational tools for the joint placement/delivery LP, its converse,
closed-form trade-offs, explicit schemes and a bit-level simulator.
"""
from .achievability import (
    Scheme,
    auto_scheme,
    build_o1,
    min_load_restricted,
    min_load_uncoded_linear,
    scheme_large_memory,
    scheme_small_memory,
    scheme_threshold,
    scheme_three_user,
)
from .closed_form import (
    d2d_server_identity_check,
    load_equal,
    load_large_memory,
    load_small_memory,
    load_three_user,
    load_threshold,
    server_load_equal,
)
from .converse import (
    AlphaWeights,
    LowerBoundCertificate,
    best_lower_bound,
    cutset_bound,
    gamma,
    lower_bound_dual,
    lower_bound_primal,
    preset_alphas,
)
from .core import (
    Allocation,
    CacheProfile,
    DeliveryPlan,
    classify_region,
    delivery_feasible,
    delivery_load,
    placement_feasible,
    validate_profile,
)
from .lp import LinearProgram, solve, verify_certificate
from .simulator import simulate

__version__ = "0.1.0"
