"""Gate set and unitary matrices for the statevector simulator.

Supported gates:
- Single-qubit: H, X, Y, Z, S, T, SX (sqrt-X), RX, RY, RZ
- Two-qubit: CX (targets = [control, target]), CZ, SWAP

Two-qubit matrices are written in the |a b> basis where a is the first
target, so CX's first target is the control.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np


class CircuitError(Exception):
    """Raised for malformed gates, programs or out-of-range indices."""
    pass


class GateKind(str, Enum):
    """Enumeration of supported gate kinds."""
    H = 'H'
    X = 'X'
    Y = 'Y'
    Z = 'Z'
    S = 'S'
    T = 'T'
    SX = 'SX'
    RX = 'RX'
    RY = 'RY'
    RZ = 'RZ'
    CX = 'CX'
    CZ = 'CZ'
    SWAP = 'SWAP'

    @property
    def arity(self) -> int:
        """Number of qubits the gate acts on."""
        return 2 if self in TWO_QUBIT_KINDS else 1

    @property
    def n_params(self) -> int:
        """Number of rotation angles the gate takes."""
        return 1 if self in ROTATION_KINDS else 0


ROTATION_KINDS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
TWO_QUBIT_KINDS = frozenset({GateKind.CX, GateKind.CZ, GateKind.SWAP})
SINGLE_QUBIT_KINDS = tuple(k for k in GateKind if k not in TWO_QUBIT_KINDS)
ALL_KINDS = tuple(GateKind)

_SQRT_HALF = 1.0 / np.sqrt(2.0)

_FIXED_MATRICES: Dict[GateKind, np.ndarray] = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    GateKind.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    GateKind.CX: np.array([
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ], dtype=complex),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    GateKind.SWAP: np.array([
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ], dtype=complex),
}


def _rotation_matrix(kind: GateKind, theta: float) -> np.ndarray:
    """Build RX/RY/RZ for angle theta (radians)."""
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One gate application.

    Attributes:
        kind: Gate kind
        targets: Qubit indices (0-based); length equals the kind's arity
        params: Rotation angles in radians (one for RX/RY/RZ, none otherwise)

    Example:
        >>> Gate(GateKind.CX, (0, 1))
        >>> Gate(GateKind.RZ, (2,), (0.25,))
    """

    kind: GateKind
    targets: Tuple[int, ...]
    params: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'targets', tuple(int(t) for t in self.targets))
        object.__setattr__(self, 'params', tuple(float(p) for p in self.params))

        if len(self.targets) != kind.arity:
            raise CircuitError(
                f"{kind.value} acts on {kind.arity} qubit(s), got targets {list(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise CircuitError(f"{kind.value} targets must be distinct, got {list(self.targets)}")
        if any(t < 0 for t in self.targets):
            raise CircuitError(f"Negative qubit index in {list(self.targets)}")
        if len(self.params) != kind.n_params:
            raise CircuitError(
                f"{kind.value} takes {kind.n_params} parameter(s), got {len(self.params)}"
            )

    @property
    def arity(self) -> int:
        return self.kind.arity

    def matrix(self) -> np.ndarray:
        """Return the gate's unitary (2x2 or 4x4)."""
        if self.kind in ROTATION_KINDS:
            return _rotation_matrix(self.kind, self.params[0])
        return _FIXED_MATRICES[self.kind]

    def to_dict(self) -> Dict[str, Any]:
        """Serialize in the circuit file format (params omitted when empty)."""
        data: Dict[str, Any] = {'kind': self.kind.value, 'targets': list(self.targets)}
        if self.params:
            data['params'] = list(self.params)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Gate':
        """Parse a gate object `{kind, params?, targets}`.

        Raises:
            CircuitError: If the kind is unknown or fields are malformed
        """
        try:
            kind = GateKind(data['kind'])
        except (KeyError, ValueError):
            raise CircuitError(f"Unknown or missing gate kind in {data!r}")
        if 'targets' not in data:
            raise CircuitError(f"Gate {kind.value} is missing 'targets'")
        return cls(kind, tuple(data['targets']), tuple(data.get('params', ())))

    def __str__(self) -> str:
        angle = f"({self.params[0]:.4f})" if self.params else ""
        return f"{self.kind.value}{angle} {list(self.targets)}"
