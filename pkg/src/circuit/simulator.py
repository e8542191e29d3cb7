"""Exact statevector simulation of segmented programs.

Amplitudes are stored basis-ordered with qubit 0 as the least-significant
bit, so basis index 1 on two qubits is the bitstring "01" (qubit 0 set).
Gates are applied by contracting the gate tensor with the (2,)*n view of
the state; qubit q lives on tensor axis n-1-q.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional

import numpy as np

from src.circuit.gates import CircuitError, Gate
from src.circuit.program import Segment, SegmentedProgram

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10


def basis_label(index: int, n_qubits: int) -> str:
    """Bitstring key for a basis index (qubit 0 is the rightmost character)."""
    return format(index, f'0{n_qubits}b')


def basis_index(label: str) -> int:
    """Inverse of basis_label."""
    return int(label, 2)


class Statevector:
    """Immutable 2^n complex amplitude vector.

    Example:
        >>> state = Statevector.zero(2)
        >>> state.probabilities()
        array([1., 0., 0., 0.])
    """

    def __init__(self, amplitudes: np.ndarray, n_qubits: Optional[int] = None):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        size = amplitudes.shape[0]
        inferred = int(size).bit_length() - 1
        if size < 2 or (1 << inferred) != size:
            raise CircuitError(f"Amplitude vector length {size} is not a power of two >= 2")
        if n_qubits is not None and n_qubits != inferred:
            raise CircuitError(f"Expected {1 << n_qubits} amplitudes for {n_qubits} qubits, got {size}")

        self._amplitudes = amplitudes.copy()
        self._amplitudes.setflags(write=False)
        self.n_qubits = inferred

    @classmethod
    def zero(cls, n_qubits: int) -> 'Statevector':
        """|0...0>."""
        amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
        amplitudes[0] = 1.0
        return cls(amplitudes)

    @property
    def amplitudes(self) -> np.ndarray:
        """Read-only amplitude array."""
        return self._amplitudes

    def probabilities(self) -> np.ndarray:
        """|a_b|^2 for every basis b."""
        return np.abs(self._amplitudes) ** 2

    def norm_squared(self) -> float:
        return float(np.sum(self.probabilities()))

    def is_normalized(self, tolerance: float = NORM_TOLERANCE) -> bool:
        return abs(self.norm_squared() - 1.0) <= tolerance

    def probability_map(self, tolerance: float = 0.0) -> Dict[str, float]:
        """Probabilities keyed by bitstring, omitting bases at or below tolerance."""
        return {
            basis_label(i, self.n_qubits): float(p)
            for i, p in enumerate(self.probabilities())
            if p > tolerance
        }

    def __repr__(self) -> str:
        return f"<Statevector(n_qubits={self.n_qubits}, norm2={self.norm_squared():.12f})>"


@dataclass(frozen=True)
class CountsMap:
    """Observed Z-basis outcome counts.

    Attributes:
        n_qubits: Bitstring length
        counts: Bitstring -> count (zero-count bases may be absent)
    """

    n_qubits: int
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for key, value in self.counts.items():
            if len(key) != self.n_qubits or set(key) - {'0', '1'}:
                raise CircuitError(f"Invalid basis key {key!r} for {self.n_qubits} qubit(s)")
            if value < 0:
                raise CircuitError(f"Negative count for basis {key}")
            if value:
                cleaned[key] = int(value)
        object.__setattr__(self, 'counts', dict(sorted(cleaned.items())))

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def get(self, key: str, default: int = 0) -> int:
        return self.counts.get(key, default)

    def keys(self):
        return self.counts.keys()

    def items(self):
        return self.counts.items()

    def __iter__(self) -> Iterator[str]:
        return iter(self.counts)

    def merge(self, other: 'CountsMap') -> 'CountsMap':
        """Accumulate another batch of counts."""
        if other.n_qubits != self.n_qubits:
            raise CircuitError("Cannot merge counts over different qubit counts")
        merged = dict(self.counts)
        for key, value in other.counts.items():
            merged[key] = merged.get(key, 0) + value
        return CountsMap(self.n_qubits, merged)

    @classmethod
    def empty(cls, n_qubits: int) -> 'CountsMap':
        return cls(n_qubits, {})


def apply_matrix(state: Statevector, matrix: np.ndarray, targets) -> Statevector:
    """Apply a 1- or 2-qubit unitary to the given qubits.

    Args:
        state: Input state
        matrix: 2x2 or 4x4 unitary; for 4x4 the first target is the high bit
        targets: Qubit indices, one per gate qubit

    Returns:
        New statevector
    """
    n = state.n_qubits
    k = len(targets)
    axes = [n - 1 - t for t in targets]
    tensor = state.amplitudes.reshape((2,) * n)
    gate = np.asarray(matrix).reshape((2,) * (2 * k))

    contracted = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), axes))
    result = np.moveaxis(contracted, list(range(k)), axes)
    return Statevector(result.reshape(-1))


def apply_gate(state: Statevector, gate: Gate, inverse: bool = False) -> Statevector:
    """Apply a gate (or its inverse) to a state.

    Raises:
        CircuitError: If the gate targets a qubit the state doesn't have
    """
    if max(gate.targets) >= state.n_qubits:
        raise CircuitError(f"Gate {gate} does not fit a {state.n_qubits}-qubit state")
    matrix = gate.matrix()
    if inverse:
        matrix = matrix.conj().T
    return apply_matrix(state, matrix, gate.targets)


def run_segment(state: Statevector, segment: Segment) -> Statevector:
    """Apply every gate of a segment in order."""
    for gate in segment.gates:
        state = apply_gate(state, gate)
    return state


def run_prefix(program: SegmentedProgram, k: int) -> Statevector:
    """Execute s_1..s_k from |0...0>.

    Args:
        program: Program to execute
        k: Number of leading segments to run (0..l); 0 returns the initial state

    Returns:
        Exact statevector after the prefix

    Raises:
        CircuitError: If k is outside 0..l

    Example:
        >>> run_prefix(bell, 2).amplitudes
        array([0.70710678+0.j, 0.+0.j, 0.+0.j, 0.70710678+0.j])
    """
    if not 0 <= k <= program.n_segments:
        raise CircuitError(f"Prefix length {k} out of range 0..{program.n_segments}")

    state = Statevector.zero(program.n_qubits)
    for segment in program.segments[:k]:
        state = run_segment(state, segment)
    return state


def prefix_states(program: SegmentedProgram) -> Iterator[Statevector]:
    """Yield run_prefix(program, k) for k = 1..l, reusing each step."""
    state = Statevector.zero(program.n_qubits)
    for segment in program.segments:
        state = run_segment(state, segment)
        yield state


def sample_counts(state: Statevector, shots: int, rng: np.random.Generator) -> CountsMap:
    """Draw independent Z-basis measurement outcomes.

    Args:
        state: State to measure
        shots: Number of shots (>= 1)
        rng: Seeded generator owned by the caller

    Returns:
        Outcome counts; identical (state, shots, seed) give identical counts

    Raises:
        CircuitError: If shots < 1
    """
    if shots < 1:
        raise CircuitError(f"shots must be >= 1, got {shots}")
    return sample_from_probabilities(state.probabilities(), state.n_qubits, shots, rng)


def sample_from_probabilities(
    probabilities: np.ndarray,
    n_qubits: int,
    shots: int,
    rng: np.random.Generator
) -> CountsMap:
    """Multinomial draw over a probability vector (renormalized for float drift)."""
    probs = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    probs = probs / probs.sum()
    draws = rng.multinomial(shots, probs)
    return CountsMap(n_qubits, {
        basis_label(int(i), n_qubits): int(draws[i])
        for i in np.flatnonzero(draws)
    })


def prefix_cost(program: SegmentedProgram, x: int) -> int:
    """c_x: number of gates executed to prepare the output state of s_x.

    Raises:
        CircuitError: If x is outside 1..l
    """
    if not 1 <= x <= program.n_segments:
        raise CircuitError(f"Segment index {x} out of range 1..{program.n_segments}")
    return sum(program.gate_counts[:x])


def probability_difference(first: Statevector, second: Statevector) -> float:
    """Sum over bases of | |a_b|^2 - |a'_b|^2 |."""
    if first.n_qubits != second.n_qubits:
        raise CircuitError("States have different qubit counts")
    return float(np.sum(np.abs(first.probabilities() - second.probabilities())))
