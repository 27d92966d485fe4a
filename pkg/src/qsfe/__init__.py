"""Executable lower bounds for reducing quantum secure function evaluation to trusted randomness."""

from .attack import (
    AttackResult,
    ProtocolInstance,
    canonical_protocol,
    check_bob_security,
    check_correctness,
    extraction_attack,
    precomputed_ot,
    thm2_experiment,
)
from .functions import FunctionTable, builtin, concealment_t
from .primitives import JointDistribution, entropy_sum, oblivious_key, power, rabin_key
from .qstate import DensityOperator, Measurement, PureState, RegisterLayout

__version__ = "0.1.0"
