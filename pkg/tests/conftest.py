"""Pytest configuration and fixtures for testing."""

import os

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from src.circuit.gates import Gate, GateKind
from src.circuit.program import from_gate_lists
from src.circuit.simulator import CountsMap
from src.database.models import Base
from src.harness.generator import build_oracles
from src.search.backends import MeasurementBackend
from src.search.locator import SearchConfig
from src.stats.determination import Thresholds

# Small per-segment rotation; the bug rotates much further so every
# prefix from the bug onwards has clearly different populations.
CHAIN_ANGLE = 0.1
BUG_ANGLE = 0.9


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running corpus experiments (set RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.getenv('RUN_SLOW') == '1':
        return
    skip_slow = pytest.mark.skip(reason="slow test; set RUN_SLOW=1 to run")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='function')
def test_db():
    """Create a fresh in-memory test database for each test.

    Yields:
        SQLAlchemy session connected to in-memory database

    Example:
        >>> def test_save(test_db):
        ...     save_report(test_db, report)
        ...     test_db.commit()
    """
    # Use in-memory SQLite for speed
    engine = create_engine('sqlite:///:memory:', echo=False)
    Base.metadata.create_all(engine)

    TestSession = sessionmaker(bind=engine)
    session = TestSession()

    yield session

    session.close()
    engine.dispose()


def make_chain(n_segments: int, bug_at=None, gates_per_segment=None):
    """1-qubit program of RY rotations, optionally with one over-rotated gate.

    Args:
        n_segments: l
        bug_at: Segment whose first gate becomes RY(BUG_ANGLE)
        gates_per_segment: g_i per segment (default 1 each)
    """
    counts = gates_per_segment or [1] * n_segments
    segments = []
    for index, count in enumerate(counts, start=1):
        gates = [Gate(GateKind.RY, (0,), (CHAIN_ANGLE,)) for _ in range(count)]
        if index == bug_at:
            gates[0] = Gate(GateKind.RY, (0,), (BUG_ANGLE,))
        segments.append(gates)
    return from_gate_lists(1, segments)


@pytest.fixture
def chain():
    """Factory for RY-chain programs (see make_chain)."""
    return make_chain


@pytest.fixture
def bell_program():
    """Two-segment Bell-state program: H on q0, then CX(0 -> 1)."""
    return from_gate_lists(2, [
        [Gate(GateKind.H, (0,))],
        [Gate(GateKind.CX, (0, 1))],
    ])


@pytest.fixture
def chain_oracles():
    """Factory: oracles for the bug-free chain with l segments."""
    def build(n_segments: int, gates_per_segment=None):
        return build_oracles(make_chain(n_segments, gates_per_segment=gates_per_segment))
    return build


@pytest.fixture
def default_cfg():
    """Search config with the standard thresholds and budget."""
    return SearchConfig(thresholds=Thresholds())


class FixedCountsBackend(MeasurementBackend):
    """Returns the same counts for every request, scaled to the shots asked for.

    Args:
        program: Program under test (only its shape is used)
        proportions: Bitstring -> fraction of shots
    """

    def __init__(self, program, proportions):
        super().__init__(program)
        self.proportions = proportions

    def _measure(self, k, shots):
        return CountsMap(self.n_qubits, {
            basis: int(round(fraction * shots)) for basis, fraction in self.proportions.items()
        })


@pytest.fixture
def fixed_backend():
    """Factory for FixedCountsBackend."""
    return FixedCountsBackend
