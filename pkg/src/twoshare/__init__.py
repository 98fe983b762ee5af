"""Two-out-of-two secret sharing with built-in forgery detection.

The package splits a secret block into shares X and Y so that either
share alone carries no information about the secret, the pair recombines
to the secret, and a forged substitute for either share is caught with
probability approaching one as the block grows.
"""
from .outcome import DecodeOutcome, REJECT, accepted
from .prob import (
    PMF,
    JointPMF,
    RationalJoint,
    RandomStream,
    CapExceededError,
    entropy,
    entropy_mp,
    binary_entropy,
    mutual_information,
    conditional_entropy,
    induce_joint,
    pushforward,
    iid_extension,
    sample,
)
from .typical import (
    GammaSchedule,
    TypicalIndex,
    EmptyTypicalSetError,
    build_index,
    surprisal_totals,
    is_typical,
    atypical_mass,
    atypical_mass_mc,
)
from .block import (
    BlockShare,
    BlockRandomness,
    BlockwiseParams,
    BlockQuantities,
    floor_pow2,
    encode,
    accepts,
    decode,
    exact_quantities,
    monte_carlo_error,
)
from .symbol import (
    BaseScheme,
    ValidationReport,
    SchemeValidationError,
    SymbolwiseCodec,
    SymbolQuantities,
    fstar,
    gstar,
    modular_scheme,
    modular_correlation_level,
    identity_leak_scheme,
    nondecodable_scheme,
    undersized_scheme,
    validate_base,
    make_codec,
    encode_n,
    decode_n,
    accepts_n,
    llr_score,
    exact_symbolwise_quantities,
)
from .attack import (
    AttackResult,
    TestQuantities,
    BoundCheck,
    blockwise_attack,
    symbolwise_attack,
    attack_bruteforce,
    monte_carlo_attack,
    modular_attack_success,
    exponent_points,
    exponent_fit,
    test_quantities,
    blockwise_test_quantities,
    symbolwise_test_quantities,
    logsum_bound_check,
    fano_check,
    converse_exponent_check,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    RunRecord,
    ConfigError,
    run_experiment,
    emit_csv,
    emit_jsonl,
    emit_report,
    read_report_jsonl,
    read_report_csv,
)

__version__ = "0.1.0"
