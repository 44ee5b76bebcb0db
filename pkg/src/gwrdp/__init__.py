"""Gray-Wyner rate-distortion-perception toolkit."""

__version__ = "0.1.0"

from .prob import (
    AlphabetMismatchError,
    EmpiricalType,
    JointPmf,
    Kernel,
    Pmf,
    conditional_mutual_information,
    empirical_type,
    entropy,
    expected_distortion,
    joint_empirical_type,
    kl_divergence,
    mutual_information,
    tv_distance,
)
from .solver import (
    DistortionMatrix,
    InfeasibleError,
    PerceptionMeasure,
    RdpQuery,
    RdpResult,
    brute_force_rdp,
    conditional_rdp,
    feasibility_report,
    hamming,
    rdp_point_to_point,
)
from .region import (
    AuxChannel,
    Budgets,
    RegionFrontier,
    RegionPoint,
    RegionProblem,
    compute_frontier,
    rate_triple_for_aux,
    scalarized_search,
)
from .codec import (
    Codebook,
    CodeSizes,
    EmptyTypicalSetError,
    ShiftSeed,
    TypicalSetSpec,
    circular_shift,
    compute_code_sizes,
    decode,
    encode,
    generate_codebook,
    is_cond_typical,
    is_jointly_typical,
    is_typical,
    sample_uniform_cond_typical,
    sample_uniform_typical,
    shift_position,
)
from .derandom import (
    SeedMap,
    SeedMapError,
    build_seed_map,
    default_tail_length,
    deterministic_decode,
    deterministic_encode,
)
from .simulate import ResourceCapError, SimConfig, SimReport, convergence_study, run_simulation

__all__ = [name for name in dir() if not name.startswith("_")]
