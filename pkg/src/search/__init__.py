"""Cost-based search tree and the bug-locating search loop."""

from src.search.backends import (
    BackendError,
    MeasurementBackend,
    PerfectEvidenceBackend,
    SimulatorBackend,
)
from src.search.locator import (
    LocateResult,
    LocateStatus,
    SearchConfig,
    TraceRecord,
    deepest_reachable,
    finalization_targets,
    locate,
    suspicious_node,
)
from src.search.tree import (
    SearchError,
    SearchNode,
    SearchTree,
    compose_tree,
    expected_search_cost,
    select_middle,
)

__all__ = [
    'BackendError', 'MeasurementBackend', 'PerfectEvidenceBackend', 'SimulatorBackend',
    'LocateResult', 'LocateStatus', 'SearchConfig', 'TraceRecord', 'deepest_reachable',
    'finalization_targets', 'locate', 'suspicious_node', 'SearchError', 'SearchNode',
    'SearchTree', 'compose_tree', 'expected_search_cost', 'select_middle',
]
