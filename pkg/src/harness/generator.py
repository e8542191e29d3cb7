"""Random program generation, bug injection and oracle construction.

All randomness flows through numpy Generators derived by seed splitting,
so (seed, stream, index) fully determines every program, bug and
measurement stream of a corpus.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.circuit.gates import (
    ALL_KINDS,
    SINGLE_QUBIT_KINDS,
    TWO_QUBIT_KINDS,
    CircuitError,
    Gate,
    GateKind,
)
from src.circuit.program import Segment, SegmentedProgram
from src.circuit.simulator import prefix_states, probability_difference, run_prefix
from src.stats.chi_square import CategoricalOracle
from src.utils.config import config

logger = logging.getLogger(__name__)

# Seed-splitting stream identifiers
STREAM_PROGRAM = 0
STREAM_BUG = 1
STREAM_MEASURE = 2
STREAM_ORACLE = 3


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, *keys).

    Example:
        >>> a = derive_rng(7, STREAM_MEASURE, 3)
        >>> b = derive_rng(7, STREAM_MEASURE, 3)
        >>> a.random() == b.random()
        True
    """
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError(f"Seed and stream keys must be non-negative, got {(seed, *keys)}")
    return np.random.default_rng(np.random.SeedSequence((seed, *keys)))


@dataclass(frozen=True)
class GenSpec:
    """Shape of a random program.

    Attributes:
        n_qubits: Qubit count
        n_segments: l
        n_gates: Total gates over all segments
        seed: Corpus seed
    """

    n_qubits: int
    n_segments: int
    n_gates: int
    seed: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.n_qubits > config.max_qubits:
            raise CircuitError(f"n_qubits {self.n_qubits} exceeds the cap of {config.max_qubits}")
        if self.n_segments < 2:
            raise CircuitError(f"n_segments must be >= 2, got {self.n_segments}")
        if self.n_gates < self.n_segments:
            raise CircuitError(
                f"n_gates ({self.n_gates}) must be >= n_segments ({self.n_segments}) "
                "so every segment is nonempty"
            )
        if self.seed < 0:
            raise CircuitError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_config(cls, seed: int = 0, **overrides: Any) -> 'GenSpec':
        fields = dict(config.generation_defaults)
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls(int(fields['n_qubits']), int(fields['n_segments']), int(fields['n_gates']), seed)

    def to_dict(self) -> Dict[str, int]:
        return {
            'n_qubits': self.n_qubits,
            'n_segments': self.n_segments,
            'n_gates': self.n_gates,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class BugInjection:
    """One replaced gate.

    Attributes:
        segment: Buggy segment (1-based)
        gate_position: Position inside the segment (0-based)
        original: Gate in the reference program
        replacement: Gate in the buggy program
    """

    segment: int
    gate_position: int
    original: Gate
    replacement: Gate

    def to_dict(self) -> Dict[str, Any]:
        return {
            'segment': self.segment,
            'gate_position': self.gate_position,
            'original': self.original.to_dict(),
            'replacement': self.replacement.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BugInjection':
        try:
            return cls(
                int(data['segment']),
                int(data['gate_position']),
                Gate.from_dict(data['original']),
                Gate.from_dict(data['replacement']),
            )
        except KeyError as e:
            raise CircuitError(f"Injection record is missing {e}")


def random_gate(n_qubits: int, rng: np.random.Generator, kinds: Optional[Sequence[GateKind]] = None) -> Gate:
    """Uniform gate over `kinds` with random distinct targets and angle in [0, 2*pi)."""
    if kinds is None:
        kinds = ALL_KINDS if n_qubits >= 2 else SINGLE_QUBIT_KINDS
    kinds = [k for k in kinds if k.arity <= n_qubits]
    if not kinds:
        raise CircuitError(f"No gate kind fits {n_qubits} qubit(s)")

    kind = kinds[int(rng.integers(len(kinds)))]
    targets = tuple(int(t) for t in rng.choice(n_qubits, size=kind.arity, replace=False))
    params = tuple(float(rng.uniform(0.0, 2.0 * math.pi)) for _ in range(kind.n_params))
    return Gate(kind, targets, params)


def random_composition(total: int, parts: int, rng: np.random.Generator) -> List[int]:
    """Split `total` into `parts` positive integers, uniformly over compositions.

    Example:
        >>> random_composition(5, 5, rng)
        [1, 1, 1, 1, 1]
    """
    if parts < 1 or total < parts:
        raise CircuitError(f"Cannot split {total} gates into {parts} nonempty segments")
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    bounds = [0, *[int(c) for c in cuts], total]
    return [bounds[i + 1] - bounds[i] for i in range(parts)]


def generate_program(spec: GenSpec, rng: Optional[np.random.Generator] = None) -> SegmentedProgram:
    """Draw a random segmented program.

    Args:
        spec: Program shape
        rng: Generator to draw from (defaults to spec.seed's program stream)

    Returns:
        Program with sum(g_i) = n_gates and every g_i >= 1
    """
    rng = rng if rng is not None else derive_rng(spec.seed, STREAM_PROGRAM)
    sizes = random_composition(spec.n_gates, spec.n_segments, rng)
    segments = []
    for size in sizes:
        segments.append(Segment(tuple(random_gate(spec.n_qubits, rng) for _ in range(size))))
    return SegmentedProgram(spec.n_qubits, tuple(segments))


def _replacement_gate(original: Gate, n_qubits: int, rng: np.random.Generator) -> Gate:
    pool = TWO_QUBIT_KINDS if original.arity == 2 else SINGLE_QUBIT_KINDS
    pool = sorted(pool, key=lambda k: k.value)
    while True:
        candidate = random_gate(n_qubits, rng, pool)
        if candidate != original:
            return candidate


def _inject_at(program: SegmentedProgram, segment: int, rng: np.random.Generator) -> Tuple[SegmentedProgram, BugInjection]:
    current = program.segment(segment)
    position = int(rng.integers(current.gate_count))
    original = current.gates[position]
    replacement = _replacement_gate(original, program.n_qubits, rng)
    buggy = program.replace_segment(segment, current.replace_gate(position, replacement))
    return buggy, BugInjection(segment, position, original, replacement)


def inject_bug(program: SegmentedProgram, rng: np.random.Generator) -> Tuple[SegmentedProgram, BugInjection]:
    """Replace one uniformly chosen gate with a different gate of the same arity.

    The input program is left untouched; gate counts (and so all c_x) are preserved.
    """
    segment = int(rng.integers(1, program.n_segments + 1))
    return _inject_at(program, segment, rng)


def inject_bugs(
    program: SegmentedProgram,
    rng: np.random.Generator,
    count: int
) -> Tuple[SegmentedProgram, List[BugInjection]]:
    """Inject `count` bugs into distinct segments.

    Returns:
        (buggy program, injections sorted by segment)

    Raises:
        CircuitError: If count is outside 1..l
    """
    if not 1 <= count <= program.n_segments:
        raise CircuitError(f"Cannot inject {count} bugs into {program.n_segments} segments")
    chosen = sorted(int(s) + 1 for s in rng.choice(program.n_segments, size=count, replace=False))
    buggy = program
    injections = []
    for segment in chosen:
        buggy, injection = _inject_at(buggy, segment, rng)
        injections.append(injection)
    return buggy, injections


def fix_segment(buggy: SegmentedProgram, reference: SegmentedProgram, segment: int) -> SegmentedProgram:
    """Restore s_segment from the reference program."""
    return buggy.replace_segment(segment, reference.segment(segment))


def output_difference(reference: SegmentedProgram, buggy: SegmentedProgram) -> float:
    """Sum over bases of the absolute output-probability difference."""
    if reference.n_segments != buggy.n_segments or reference.n_qubits != buggy.n_qubits:
        raise CircuitError("Reference and buggy programs have different shapes")
    l = reference.n_segments
    return probability_difference(run_prefix(reference, l), run_prefix(buggy, l))


def detectability_filter(
    reference: SegmentedProgram,
    buggy: SegmentedProgram,
    threshold: Optional[float] = None
) -> bool:
    """Keep a program/bug pair only if its output probabilities differ by more than threshold.

    Args:
        reference: Bug-free program
        buggy: Program under test
        threshold: Exclusion threshold (default experiment.filter_threshold, 0.05)

    Returns:
        True to keep the pair
    """
    if threshold is None:
        threshold = float(config.experiment_settings.get('filter_threshold', 0.05))
    return output_difference(reference, buggy) > threshold


def build_oracles(
    reference: SegmentedProgram,
    limit_bases: Optional[int] = None,
    rng: Optional[np.random.Generator] = None
) -> Dict[int, CategoricalOracle]:
    """Expected distribution of every prefix output of the reference program.

    Args:
        reference: Bug-free program
        limit_bases: Declare only this many randomly chosen nonzero bases
        rng: Generator for the basis selection (required with limit_bases)

    Returns:
        Segment index k (1..l) -> oracle for the output of s_k
    """
    if limit_bases is not None and limit_bases < 1:
        raise ValueError(f"limit_bases must be >= 1, got {limit_bases}")
    if limit_bases is not None and rng is None:
        raise ValueError("limit_bases requires an rng")

    tolerance = float(config.simulator_settings.get('oracle_zero_tolerance', 1e-12))
    oracles = {}
    for k, state in enumerate(prefix_states(reference), start=1):
        probs = state.probability_map(tolerance)
        if limit_bases is not None and len(probs) > limit_bases:
            bases = sorted(probs)
            picked = sorted(bases[int(i)] for i in rng.choice(len(bases), size=limit_bases, replace=False))
            oracles[k] = CategoricalOracle.from_probabilities({b: probs[b] for b in picked}, restricted=True)
        else:
            oracles[k] = CategoricalOracle.from_probabilities(probs)
    return oracles
