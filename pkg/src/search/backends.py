"""Measurement backends that serve prefix-state counts to a search.

A backend answers "run s_1..s_k and measure `shots` times". Repeated
requests for the same prefix return fresh, independent samples.
"""

import logging
from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from src.circuit.program import SegmentedProgram
from src.circuit.simulator import (
    CountsMap,
    basis_label,
    prefix_states,
    sample_from_probabilities,
)

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """Raised when a backend cannot serve a measurement request."""
    pass


class MeasurementBackend(ABC):
    """Source of measurement counts for prefixes of the program under test."""

    def __init__(self, program: SegmentedProgram):
        self.program = program
        self.requests = 0

    @property
    def n_qubits(self) -> int:
        return self.program.n_qubits

    def measure(self, k: int, shots: int) -> CountsMap:
        """Counts from `shots` executions of s_1..s_k.

        Raises:
            BackendError: If k or shots are out of range
        """
        if not 1 <= k <= self.program.n_segments:
            raise BackendError(f"Prefix {k} out of range 1..{self.program.n_segments}")
        if shots < 1:
            raise BackendError(f"shots must be >= 1, got {shots}")
        self.requests += 1
        return self._measure(k, shots)

    @abstractmethod
    def _measure(self, k: int, shots: int) -> CountsMap:
        ...


class _PrefixProbabilityCache:
    """Probability vectors of every prefix, simulated once on first use."""

    def __init__(self, program: SegmentedProgram):
        self._program = program
        self._probabilities: Dict[int, np.ndarray] = {}

    def get(self, k: int) -> np.ndarray:
        if not self._probabilities:
            for index, state in enumerate(prefix_states(self._program), start=1):
                self._probabilities[index] = state.probabilities()
        return self._probabilities[k]


class SimulatorBackend(MeasurementBackend):
    """Samples from exact statevector simulation of the program under test.

    Example:
        >>> backend = SimulatorBackend(buggy_program, np.random.default_rng(7))
        >>> backend.measure(3, 100).total_shots
        100
    """

    def __init__(self, program: SegmentedProgram, rng: np.random.Generator):
        super().__init__(program)
        self.rng = rng
        self._cache = _PrefixProbabilityCache(program)

    def _measure(self, k: int, shots: int) -> CountsMap:
        return sample_from_probabilities(self._cache.get(k), self.n_qubits, shots, self.rng)


class PerfectEvidenceBackend(MeasurementBackend):
    """Returns exact expected counts scaled to a large fixed pseudo-shot count.

    Every request answers with round(p_b * pseudo_shots) per basis, whatever
    `shots` was asked for, so tests finalize on the first batch. The shots
    requested are still what the search charges to its cost ledger.
    """

    def __init__(self, program: SegmentedProgram, pseudo_shots: int = 1_000_000):
        super().__init__(program)
        self.pseudo_shots = pseudo_shots
        self._cache = _PrefixProbabilityCache(program)

    def _measure(self, k: int, shots: int) -> CountsMap:
        probabilities = self._cache.get(k)
        expected = np.rint(probabilities * self.pseudo_shots).astype(int)
        return CountsMap(self.n_qubits, {
            basis_label(int(i), self.n_qubits): int(expected[i])
            for i in np.flatnonzero(expected)
        })
