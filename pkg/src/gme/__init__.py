"""Certified bounds on genuine multipartite entanglement of three qubits.

The package computes lower and upper bounds on entanglement measures of
mixed three-qubit states from the expectation value of a single
Hermitian operator, calibrated by global optimization over pure states.
Submodules:

- ``qstate``: dense states, observables, Pauli bookkeeping.
- ``measures``: pure-state entanglement measures (concurrence fill,
  genuine multipartite concurrence).
- ``estimators``: operator calibration and certified bounds.
- ``convexroof``: variational upper estimates of mixed-state measures.
- ``lab``: simulated wave-plate preparation, counting statistics and
  tomography.
- ``cli``: command-line entry point.
"""

from .qstate import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    bisep,
    expectation,
    fidelity,
    ghz,
    named_state,
    partial_trace,
    purity,
    w_state,
)
from .measures import MEASURES, concurrence_fill, gmc, measure_by_name

__all__ = [
    "DensityMatrix",
    "HermitianOperator",
    "PureState",
    "bisep",
    "expectation",
    "fidelity",
    "ghz",
    "named_state",
    "partial_trace",
    "purity",
    "w_state",
    "MEASURES",
    "concurrence_fill",
    "gmc",
    "measure_by_name",
]
