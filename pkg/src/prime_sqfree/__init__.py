"""Exact counts and empirical checks for primes times square-free integers in residue classes."""

from .arith import (
    ModulusContext,
    SieveTables,
    batch_mod_inverse,
    build_modulus_context,
    build_sieve,
    get_tables,
    mod_inverse,
    segmented_primes,
)
from .asymptotics import (
    CountReport,
    Regime,
    RegimeConfig,
    bound_B,
    build_report,
    choose_D,
    classify_regime,
    envelope_E,
    main_term,
    positivity_conditions,
    predicted_N_q,
    predicted_s_q,
)
from .counting import (
    ProblemInstance,
    count_exact,
    count_N_q,
    count_pairs_all,
    count_via_mobius,
    mobius_split,
    pi_q,
    s_q,
    sum_over_residues,
)
from .errors import (
    CapacityError,
    DegenerateRange,
    EmptySequence,
    InvalidResidue,
    NoInverse,
)
from .expsums import (
    KloostermanValue,
    interval_count_error,
    inverse_residue_discrepancy,
    kloosterman_prime_sum,
    parseval_check,
)

__version__ = "0.1.0"
