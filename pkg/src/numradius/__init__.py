"""Numerical radius, numerical index and attainment corrections on finite-dimensional normed spaces."""

from .bracket import Bracket
from .errors import (
    CapExceeded,
    DimensionMismatch,
    HypothesisFailed,
    NotAState,
    NotCertified,
    NotPolyhedral,
    NumRadiusError,
    PreconditionFailed,
    UnsupportedSpace,
    VerificationError,
    ZeroRadius,
)
from .numrange import (
    attaining_states,
    distance_to_skew,
    numerical_index,
    numerical_radius,
    second_numerical_index,
    skew_hermitian_basis,
)
from .operators import Operator, adjoint, apply, hermitian_split, operator_norm
from .spaces import (
    Space,
    StatePair,
    dual,
    dual_norm_of,
    duality_support,
    l1,
    l2,
    linf,
    lp,
    norm_of,
    polyhedral,
    sum_inf,
    validate_state,
    znorm,
)

__version__ = "0.1.0"
