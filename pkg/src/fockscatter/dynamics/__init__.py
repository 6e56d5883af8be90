"""Time evolution, asymptotic fields and observables, and relaxation experiments."""

from .calculus import (PositionGrid, build_position_grid, commutator_expansion_check,
                       functional_commutator_check)
from .cutoffs import EnergyWindow, VelocityCutoff, default_velocity_threshold, model_velocity_cutoff
from .deift_simon import deift_simon, extended_system, leakage_sweep, summing_partition
from .fields import (asymptotic_field, peak_decay_ratio, product_annihilation_decay,
                     wave_operator_apply)
from .observables import asymptotic_observable, free_positivity, propagation_estimate_diagnostic
from .propagation import (ConvergenceTrace, Propagator, TimeGrid, propagate, recurrence_estimate,
                          zero_mode_period)
from .relaxation import (excitation_cap, golden_rule_rate, relaxation_experiment,
                         relaxation_observable, weyl_operator)
from .sfunction import SFunction, heisenberg_dS, s_function_checks

__all__ = [
    "ConvergenceTrace", "EnergyWindow", "PositionGrid", "Propagator", "SFunction", "TimeGrid",
    "VelocityCutoff", "asymptotic_field", "asymptotic_observable", "build_position_grid",
    "commutator_expansion_check", "deift_simon", "default_velocity_threshold", "excitation_cap",
    "extended_system", "free_positivity", "functional_commutator_check", "golden_rule_rate",
    "heisenberg_dS", "leakage_sweep", "model_velocity_cutoff", "peak_decay_ratio",
    "product_annihilation_decay", "propagate", "propagation_estimate_diagnostic",
    "recurrence_estimate", "relaxation_experiment", "relaxation_observable", "s_function_checks",
    "summing_partition", "wave_operator_apply", "weyl_operator", "zero_mode_period",
]
