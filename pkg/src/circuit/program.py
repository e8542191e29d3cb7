"""Segmented quantum programs and their JSON circuit file format.

Circuit file format:
    {
      "n_qubits": 2,
      "segments": [
        [{"kind": "H", "targets": [0]}],
        [{"kind": "CX", "targets": [0, 1]}, {"kind": "RZ", "params": [0.5], "targets": [1]}]
      ]
    }

Segments are addressed 1-based (s_1..s_l) everywhere in the public API.
"""

import json
from dataclasses import dataclass
from itertools import accumulate
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from src.circuit.gates import CircuitError, Gate
from src.utils.config import config
from src.utils.validation import validate_circuit_data


@dataclass(frozen=True)
class Segment:
    """A contiguous, nonempty block of gates."""

    gates: Tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        if not self.gates:
            raise CircuitError("A segment must contain at least one gate")

    @property
    def gate_count(self) -> int:
        """g_i: number of gates in the segment."""
        return len(self.gates)

    def replace_gate(self, position: int, gate: Gate) -> 'Segment':
        """Return a copy with the gate at `position` (0-based) replaced."""
        if not 0 <= position < len(self.gates):
            raise CircuitError(f"Gate position {position} out of range for segment of {len(self.gates)}")
        gates = list(self.gates)
        gates[position] = gate
        return Segment(tuple(gates))


@dataclass(frozen=True)
class SegmentedProgram:
    """Ordered segments of gates over n qubits.

    Attributes:
        n_qubits: Number of qubits (1..max_qubits)
        segments: Segments s_1..s_l (stored 0-based, addressed 1-based)

    Example:
        >>> bell = SegmentedProgram(2, (
        ...     Segment((Gate(GateKind.H, (0,)),)),
        ...     Segment((Gate(GateKind.CX, (0, 1)),)),
        ... ))
        >>> bell.n_segments
        2
    """

    n_qubits: int
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, 'segments', tuple(self.segments))

        if self.n_qubits < 1:
            raise CircuitError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.n_qubits > config.max_qubits:
            raise CircuitError(
                f"n_qubits={self.n_qubits} exceeds the desk-scale cap of {config.max_qubits}"
            )
        if len(self.segments) < 2:
            raise CircuitError(f"A segmented program needs at least 2 segments, got {len(self.segments)}")

        for index, segment in enumerate(self.segments, start=1):
            for gate in segment.gates:
                if max(gate.targets) >= self.n_qubits:
                    raise CircuitError(
                        f"Segment {index}: gate {gate} targets a qubit outside 0..{self.n_qubits - 1}"
                    )

    @property
    def n_segments(self) -> int:
        """l: number of segments."""
        return len(self.segments)

    @property
    def gate_counts(self) -> List[int]:
        """g_1..g_l."""
        return [s.gate_count for s in self.segments]

    @property
    def total_gates(self) -> int:
        return sum(self.gate_counts)

    def segment(self, index: int) -> Segment:
        """Return s_index (1-based).

        Raises:
            CircuitError: If index is outside 1..l
        """
        if not 1 <= index <= self.n_segments:
            raise CircuitError(f"Segment index {index} out of range 1..{self.n_segments}")
        return self.segments[index - 1]

    def prefix_costs(self) -> List[int]:
        """c_1..c_l, where c_x is the number of gates in s_1..s_x."""
        return list(accumulate(self.gate_counts))

    def replace_segment(self, index: int, segment: Segment) -> 'SegmentedProgram':
        """Return a copy with s_index replaced."""
        self.segment(index)
        segments = list(self.segments)
        segments[index - 1] = segment
        return SegmentedProgram(self.n_qubits, tuple(segments))

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the circuit file structure."""
        return {
            'n_qubits': self.n_qubits,
            'segments': [[g.to_dict() for g in s.gates] for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SegmentedProgram':
        """Parse the circuit file structure.

        Raises:
            CircuitError: If fields are missing or malformed
        """
        if 'n_qubits' not in data or 'segments' not in data:
            raise CircuitError("Circuit must have 'n_qubits' and 'segments'")
        segments = tuple(
            Segment(tuple(Gate.from_dict(g) for g in raw_segment))
            for raw_segment in data['segments']
        )
        return cls(int(data['n_qubits']), segments)

    def __repr__(self) -> str:
        return f"<SegmentedProgram(n_qubits={self.n_qubits}, g={self.gate_counts})>"


def from_gate_lists(n_qubits: int, segments: Sequence[Sequence[Gate]]) -> SegmentedProgram:
    """Build a program from plain lists of gates."""
    return SegmentedProgram(n_qubits, tuple(Segment(tuple(s)) for s in segments))


def dumps_canonical(data: Any) -> str:
    """Serialize JSON with sorted keys so write→read→write is byte-identical."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def save_program(program: SegmentedProgram, path: Path) -> None:
    """Write a program in the circuit file format."""
    Path(path).write_text(dumps_canonical(program.to_dict()), encoding='utf-8')


def load_program(path: Path) -> SegmentedProgram:
    """Read a program from a circuit file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        CircuitError: If the content is not a valid circuit
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Circuit file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise CircuitError(f"{path}: invalid JSON - {e}")
    errors = validate_circuit_data(data)
    if errors:
        raise CircuitError(f"{path}: " + "; ".join(errors))
    return SegmentedProgram.from_dict(data)
