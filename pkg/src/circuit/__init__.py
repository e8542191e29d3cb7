"""Segmented quantum programs and exact statevector simulation."""

from src.circuit.gates import CircuitError, Gate, GateKind
from src.circuit.program import Segment, SegmentedProgram, load_program, save_program
from src.circuit.simulator import (
    CountsMap,
    Statevector,
    prefix_cost,
    run_prefix,
    sample_counts,
)

__all__ = [
    'CircuitError', 'Gate', 'GateKind', 'Segment', 'SegmentedProgram',
    'load_program', 'save_program', 'CountsMap', 'Statevector',
    'prefix_cost', 'run_prefix', 'sample_counts',
]
