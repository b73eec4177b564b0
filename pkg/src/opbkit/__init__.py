"""Classification toolkit for orthogonal product bases of qubit systems."""

__version__ = "0.1.0"

from .core import (
    Entry,
    InvalidMatrixError,
    OpbError,
    PatternMatrix,
    Signature,
    ValidationReport,
    is_reducible,
    multiplicity,
    orthogonality_witnesses,
    signature,
    standard_matrix,
    validate,
)
from .canonical import (
    BudgetExceededError,
    CanonicalKey,
    are_equivalent,
    brute_force_equivalent,
    canonical_form,
    canonical_key,
    fixed_order_key,
)
from .opbfile import OpbFile, OpbParseError, dataset, load, parse, serialize
from .lattice import (
    ClassRecord,
    ClassStore,
    SwitchSite,
    apply_switch,
    enumerate_classes,
    family_membership,
    hasse,
    identifications,
    is_maximal,
    splits,
    switching_orbit,
    switching_sites,
)
from .numeric import (
    Assignment,
    NumericOPB,
    associate_matrix,
    build_switch_unitary,
    gram_defect,
    instantiate,
    is_reducible_numeric,
    perp,
    prepend_qubit,
    realize,
    sample_assignment,
    tensor_opb,
    verify_frame_structure,
)

__all__ = [
    "__version__",
    "Entry",
    "InvalidMatrixError",
    "OpbError",
    "PatternMatrix",
    "Signature",
    "ValidationReport",
    "is_reducible",
    "multiplicity",
    "orthogonality_witnesses",
    "signature",
    "standard_matrix",
    "validate",
    "BudgetExceededError",
    "CanonicalKey",
    "are_equivalent",
    "brute_force_equivalent",
    "canonical_form",
    "canonical_key",
    "fixed_order_key",
    "OpbFile",
    "OpbParseError",
    "dataset",
    "load",
    "parse",
    "serialize",
    "ClassRecord",
    "ClassStore",
    "SwitchSite",
    "apply_switch",
    "enumerate_classes",
    "family_membership",
    "hasse",
    "identifications",
    "is_maximal",
    "splits",
    "switching_orbit",
    "switching_sites",
    "Assignment",
    "NumericOPB",
    "associate_matrix",
    "build_switch_unitary",
    "gram_defect",
    "instantiate",
    "is_reducible_numeric",
    "perp",
    "prepend_qubit",
    "realize",
    "sample_assignment",
    "tensor_opb",
    "verify_frame_structure",
]
