"""Second quantization, spin-boson models and scattering diagnostics on truncated Fock spaces."""

from .errors import (ConfigError, DimensionError, DomainError, FockScatterError,
                     HypothesisViolation, PreconditionError, RecurrenceError, TruncationCapError,
                     TruncationOverflowError)
from .fock import FockBasis, ModeGrid, build_basis, build_mode_grid, number_operator, vacuum
from .models import ModelInstance, build_hamiltonian, extended_hamiltonian, spin_boson_form
from .second_quant import Gamma, annihilate, create, dGamma, dGamma2, field

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DimensionError", "DomainError", "FockBasis", "FockScatterError", "Gamma",
    "HypothesisViolation", "ModeGrid", "ModelInstance", "PreconditionError", "RecurrenceError",
    "TruncationCapError", "TruncationOverflowError", "annihilate", "build_basis",
    "build_hamiltonian", "build_mode_grid",
    "create", "dGamma", "dGamma2", "extended_hamiltonian", "field", "number_operator",
    "spin_boson_form", "vacuum",
]
