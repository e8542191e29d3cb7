"""Locate several bugs by repeating locate -> fix -> re-test."""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional

from src.circuit.program import SegmentedProgram
from src.harness.generator import BugInjection, fix_segment
from src.search.backends import MeasurementBackend
from src.search.locator import LocateResult, SearchConfig, check_whole_program
from src.stats.chi_square import CategoricalOracle

logger = logging.getLogger(__name__)

BackendFactory = Callable[[SegmentedProgram, int], MeasurementBackend]
LocateMethod = Callable[
    [SegmentedProgram, MeasurementBackend, Mapping[int, CategoricalOracle], SearchConfig],
    LocateResult
]


@dataclass
class MultiBugResult:
    """Result of the iterative procedure.

    Attributes:
        located: Segments in the order they were located
        injected: Segments that actually carried a bug
        total_gate_cost: All locate and whole-program test costs
        total_shots: All shots spent
        complete: The final whole-program test passed
        message: Why the procedure stopped early, if it did
    """

    located: List[int] = field(default_factory=list)
    injected: List[int] = field(default_factory=list)
    total_gate_cost: int = 0
    total_shots: int = 0
    complete: bool = False
    message: Optional[str] = None

    @property
    def success(self) -> bool:
        return self.complete and sorted(self.located) == sorted(self.injected)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'located': list(self.located),
            'injected': list(self.injected),
            'total_gate_cost': self.total_gate_cost,
            'total_shots': self.total_shots,
            'complete': self.complete,
            'success': self.success,
            'message': self.message,
        }


def iterative_multibug_locate(
    reference: SegmentedProgram,
    buggy: SegmentedProgram,
    injections: List[BugInjection],
    oracles: Mapping[int, CategoricalOracle],
    cfg: SearchConfig,
    method: LocateMethod,
    backend_factory: BackendFactory
) -> MultiBugResult:
    """Locate and fix bugs until the whole program passes.

    Each round tests the whole program with strict thresholds; if a bug is
    detected, `method` locates one segment, which is then restored from the
    reference program. The forward-most bug is the one a round finds.

    Args:
        reference: Bug-free program (source of fixes)
        buggy: Program under test
        injections: Ground-truth bugs, for scoring
        oracles: Segment index -> oracle (1..l)
        cfg: Search configuration
        method: Single-bug locator (proposed, binary or linear)
        backend_factory: (program, round) -> backend measuring that program

    Returns:
        MultiBugResult; partial when a locate or whole-program test fails
    """
    l = buggy.n_segments
    result = MultiBugResult(injected=sorted(i.segment for i in injections))
    current = buggy

    for round_index in range(l + 1):
        backend = backend_factory(current, round_index)
        check = check_whole_program(backend, oracles[l], cfg)
        result.total_gate_cost += check.total_gate_cost
        result.total_shots += check.total_shots

        if check.bug_free:
            result.complete = True
            return result
        if not check.bug_detected:
            result.message = "whole-program test reached m_max without a determination"
            return result

        located = method(current, backend, oracles, cfg)
        result.total_gate_cost += located.total_gate_cost
        result.total_shots += located.total_shots
        if not located.located:
            result.message = located.message or "locate failed"
            return result
        if located.segment in result.located:
            result.message = f"s_{located.segment} located again after its fix"
            return result

        logger.debug("Round %d located s_%d", round_index, located.segment)
        result.located.append(located.segment)
        current = fix_segment(current, reference, located.segment)

    result.message = "more rounds than segments"
    return result
