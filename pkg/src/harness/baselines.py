"""Naive linear and naive binary search baselines.

Both use only the strict thresholds and charge shots * c_x per batch
through the same BatchRunner as the proposed search, so their costs are
directly comparable.
"""

import logging
from typing import Mapping, Optional

from src.circuit.program import SegmentedProgram
from src.search.backends import MeasurementBackend
from src.search.locator import BatchRunner, LocateResult, LocateStatus, SearchConfig, locate
from src.search.tree import CENTRAL, SearchNode, compose_tree
from src.stats.chi_square import CategoricalOracle
from src.stats.determination import Determination

logger = logging.getLogger(__name__)


def linear_locate(
    program: SegmentedProgram,
    backend: MeasurementBackend,
    oracles: Mapping[int, CategoricalOracle],
    cfg: Optional[SearchConfig] = None
) -> LocateResult:
    """Test s_1, s_2, ... in order until one fails.

    Each prefix is measured until it is LeftFinalized or RightFinalized.
    The first LeftFinalized s_x locates x; if s_1..s_{l-1} all pass, s_l
    is reported (the whole program is known to fail).

    Args:
        program: Program under test
        backend: Measurement source for the program
        oracles: Segment index -> oracle (1..l-1 required)
        cfg: Search configuration; only thresholds and budget are used

    Returns:
        LocateResult (Failed if any prefix exhausts m_max)
    """
    cfg = cfg or SearchConfig.from_config()
    runner = BatchRunner(backend, oracles, program.prefix_costs(), cfg)
    l = program.n_segments

    for x in range(1, l):
        node = SearchNode.for_segment(x)
        while not node.dtmn.is_finalized:
            if runner.exhausted(node):
                return runner.result(LocateStatus.FAILED, message=f"s_{x} reached m_max without a determination")
            runner.run_batch(node, early=False)
        if node.dtmn is Determination.LEFT_FINALIZED:
            logger.debug("Linear search stopped at s_%d", x)
            return runner.result(LocateStatus.LOCATED, x)

    return runner.result(LocateStatus.LOCATED, l)


def naive_binary_locate(
    program: SegmentedProgram,
    backend: MeasurementBackend,
    oracles: Mapping[int, CategoricalOracle],
    cfg: Optional[SearchConfig] = None
) -> LocateResult:
    """Binary search on the central segment of each range, strict thresholds only.

    No early determination, looking back or finalization step: every node on
    the path is finalized before the search descends past it.
    """
    cfg = cfg or SearchConfig.from_config()
    tree = compose_tree(program, CENTRAL)
    return locate(tree, backend, oracles, cfg.strict())


def proposed_locate(
    program: SegmentedProgram,
    backend: MeasurementBackend,
    oracles: Mapping[int, CategoricalOracle],
    cfg: Optional[SearchConfig] = None,
    strategy: str = 'cost'
) -> LocateResult:
    """Cost-based tree search with every approach the config enables."""
    cfg = cfg or SearchConfig.from_config()
    return locate(compose_tree(program, strategy), backend, oracles, cfg)
