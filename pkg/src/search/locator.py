"""Search loop that locates the buggy segment on a search tree.

Every iteration picks one node to test, adds a batch of shots to it,
re-runs the chi-square test on the node's accumulated counts and
re-classifies it. The node is chosen as follows:

1. Looking back: if the current path ends with D or more edges in the
   same direction, the node that emitted the last opposite edge is
   re-tested (unless it is already finalized).
2. Otherwise the deepest node reachable from the root is tested.
3. When that node is a leaf {x}, finalization tests s_{x-1} (must be
   RightFinalized) and s_x (must be LeftFinalized) before x is reported.

The search fails as soon as the node chosen for testing has used up its
m_max shots.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from src.search.backends import MeasurementBackend
from src.search.tree import SearchError, SearchNode, SearchTree
from src.stats.chi_square import CategoricalOracle, StatTestError, chi_square_test
from src.stats.determination import Determination, Thresholds, classify
from src.utils.config import config

logger = logging.getLogger(__name__)

Edge = Tuple[SearchNode, str]


@dataclass(frozen=True)
class SearchConfig:
    """Thresholds, measurement budget and switches for one search.

    Attributes:
        thresholds: Strict and relaxed p-value/power thresholds
        d_lookback: Same-direction run length that triggers looking back
        m_unit: Shots per batch
        m_max: Shot budget per node
        whole_program_confirmed: s_l was already seen failing before the search
        reset_on_return: Reset descendant determinations when a re-test flips a node
        early_determination: Use the relaxed thresholds
        finalization: Confirm s_{x-1} and s_x before reporting leaf x
        looking_back: Re-test suspicious nodes
    """

    thresholds: Thresholds = field(default_factory=Thresholds)
    d_lookback: int = 3
    m_unit: int = 100
    m_max: int = 100000
    whole_program_confirmed: bool = True
    reset_on_return: bool = False
    early_determination: bool = True
    finalization: bool = True
    looking_back: bool = True

    def __post_init__(self):
        if self.m_unit < 1:
            raise SearchError(f"m_unit must be >= 1, got {self.m_unit}")
        if self.m_unit > self.m_max:
            raise SearchError(f"m_unit ({self.m_unit}) must be <= m_max ({self.m_max})")
        if self.d_lookback < 2:
            raise SearchError(f"d_lookback must be >= 2, got {self.d_lookback}")

    @classmethod
    def from_config(
        cls,
        threshold_preset: Optional[str] = None,
        measurement_preset: Optional[str] = None,
        **overrides: Any
    ) -> 'SearchConfig':
        """Build a config from settings.yaml plus presets and overrides.

        Args:
            threshold_preset: Name under threshold_presets
            measurement_preset: Name under measurement_presets
            **overrides: Any SearchConfig or Thresholds field (None values ignored)

        Raises:
            ValueError: If a preset name is unknown
            SearchError: If the resulting budget is invalid
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        threshold_fields = {k: overrides.pop(k) for k in list(overrides) if k in Thresholds.__dataclass_fields__}
        thresholds = Thresholds.from_config(threshold_preset, **threshold_fields)

        fields = {
            k: v for k, v in config.search_defaults.items()
            if k in cls.__dataclass_fields__ and k != 'thresholds'
        }
        if measurement_preset is not None:
            if not config.is_valid_measurement_preset(measurement_preset):
                raise ValueError(
                    f"Unknown measurement preset '{measurement_preset}'. "
                    f"Must be one of: {', '.join(config.measurement_presets)}"
                )
            fields.update(config.measurement_presets[measurement_preset])

        unknown = set(overrides) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"Unknown search settings: {', '.join(sorted(unknown))}")
        fields.update(overrides)
        return cls(thresholds=thresholds, **fields)

    def with_ablation(self, ablation: str) -> 'SearchConfig':
        """Copy with one approach switched off ('no_early', 'no_finalization', 'no_lookback')."""
        switches = {
            'no_early': {'early_determination': False},
            'no_finalization': {'finalization': False},
            'no_lookback': {'looking_back': False},
        }
        if ablation not in switches:
            raise ValueError(f"Unknown ablation '{ablation}'")
        return replace(self, **switches[ablation])

    def strict(self) -> 'SearchConfig':
        """Copy using strict thresholds only, as the naive baselines do."""
        return replace(self, early_determination=False, finalization=False, looking_back=False)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['thresholds'] = self.thresholds.to_dict()
        return data


class LocateStatus(str, Enum):
    LOCATED = 'Located'
    FAILED = 'Failed'


@dataclass(frozen=True)
class TraceRecord:
    """One measurement batch (p_value and power are None when a restricted
    oracle has retained no shots yet)."""

    node_segment: int
    shots: int
    p_value: Optional[float]
    power: Optional[float]
    dtmn: str
    cumulative_cost: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LocateResult:
    """Outcome of a search.

    Attributes:
        status: Located or Failed
        segment: Located segment (None when Failed)
        total_gate_cost: Sum over batches of shots * c_x
        total_shots: Sum of shots over batches
        trace: Batches in execution order
        message: Reason for failure, if any
    """

    status: LocateStatus
    segment: Optional[int]
    total_gate_cost: int
    total_shots: int
    trace: List[TraceRecord] = field(default_factory=list)
    message: Optional[str] = None

    @property
    def located(self) -> bool:
        return self.status is LocateStatus.LOCATED

    def recompute_cost(self, costs: Sequence[int]) -> int:
        """Sum of shots * c_x over the trace, from the prefix costs alone."""
        return sum(record.shots * costs[record.node_segment - 1] for record in self.trace)

    def shots_per_segment(self) -> Dict[int, int]:
        """Shots spent on each tested segment."""
        totals: Dict[int, int] = {}
        for record in self.trace:
            totals[record.node_segment] = totals.get(record.node_segment, 0) + record.shots
        return totals

    def to_dict(self) -> Dict[str, Any]:
        return {
            'status': self.status.value,
            'segment': self.segment,
            'total_gate_cost': self.total_gate_cost,
            'total_shots': self.total_shots,
            'batches': len(self.trace),
            'message': self.message,
        }

    def write_trace(self, path: Path) -> None:
        """Export the trace as JSON lines, one record per batch."""
        lines = [json.dumps(record.to_dict(), sort_keys=True) for record in self.trace]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding='utf-8')


class BatchRunner:
    """Adds measurement batches to nodes and keeps the cost ledger.

    Shared by the proposed search and the baselines so that every method
    charges shots * c_x per batch in exactly the same way.
    """

    def __init__(
        self,
        backend: MeasurementBackend,
        oracles: Mapping[int, CategoricalOracle],
        costs: Sequence[int],
        cfg: SearchConfig
    ):
        self.backend = backend
        self.oracles = oracles
        self.costs = list(costs)
        self.cfg = cfg
        self.total_cost = 0
        self.total_shots = 0
        self.trace: List[TraceRecord] = []

    def exhausted(self, node: SearchNode) -> bool:
        return node.num_m >= self.cfg.m_max

    def run_batch(self, node: SearchNode, early: bool) -> Determination:
        """Measure one batch at a node, re-test and re-classify it.

        Returns:
            The node's new determination
        """
        x = node.middle_el
        oracle = self.oracles.get(x)
        if oracle is None:
            raise SearchError(f"No oracle for segment {x}")

        shots = min(self.cfg.m_unit, self.cfg.m_max - node.num_m)
        counts = self.backend.measure(x, shots)
        node.counts = counts if node.counts is None else node.counts.merge(counts)
        node.num_m += shots

        self.total_shots += shots
        self.total_cost += shots * self.costs[x - 1]

        try:
            outcome = chi_square_test(node.counts, oracle, sig=self.cfg.thresholds.sig)
        except StatTestError:
            if not oracle.restricted:
                raise
            # Nothing has landed on the declared bases yet: no evidence either way.
            outcome = None
        previous = node.dtmn
        node.last_outcome = outcome
        if outcome is not None:
            node.dtmn = classify(outcome, self.cfg.thresholds, early=early)

        if self.cfg.reset_on_return and _flipped(previous, node.dtmn):
            _reset_descendants(node)

        record = TraceRecord(
            node_segment=x,
            shots=shots,
            p_value=outcome.p_value if outcome else None,
            power=outcome.power if outcome else None,
            dtmn=node.dtmn.value,
            cumulative_cost=self.total_cost,
        )
        self.trace.append(record)
        logger.debug(
            "s_%d +%d shots (num_m=%d): p=%s power=%s -> %s",
            x, shots, node.num_m, record.p_value, record.power, node.dtmn.value
        )
        return node.dtmn

    def result(self, status: LocateStatus, segment: Optional[int] = None,
               message: Optional[str] = None) -> LocateResult:
        return LocateResult(
            status=status,
            segment=segment,
            total_gate_cost=self.total_cost,
            total_shots=self.total_shots,
            trace=list(self.trace),
            message=message,
        )


def _flipped(before: Determination, after: Determination) -> bool:
    return before.direction is not None and after.direction is not None and before.direction != after.direction


def _reset_descendants(node: SearchNode) -> None:
    if node.is_leaf:
        return
    for child in (node.left, node.right):
        for descendant in child.iter_preorder():
            if not descendant.dtmn.is_finalized:
                descendant.dtmn = Determination.UNDETERMINED


def search_path(tree: SearchTree) -> Tuple[List[Edge], SearchNode]:
    """Walk from the root following determinations.

    Returns:
        (edges, stop_node): edges as (emitting node, 'L'|'R') pairs and the
        node where the walk stopped
    """
    edges: List[Edge] = []
    node = tree.root
    while not node.is_leaf:
        direction = node.dtmn.direction
        if direction is None:
            break
        edges.append((node, direction))
        node = node.left if direction == 'L' else node.right
    return edges, node


def deepest_reachable(tree: SearchTree) -> SearchNode:
    """Deepest node reachable from the root (Left* -> left, Right* -> right, stop at Undetermined)."""
    return search_path(tree)[1]


def suspicious_node(tree: SearchTree, d_lookback: int) -> Optional[SearchNode]:
    """Node to look back to, if the current path warrants it.

    When the path ends with d_lookback or more edges of one direction, the
    suspect is the node that emitted the last edge of the other direction.

    Returns:
        The suspicious node, or None if there is no qualifying run, no
        opposite edge before it, or the suspect is already finalized

    Example:
        path [R, L, L, L] with d_lookback=3 -> the node that emitted R
    """
    edges, _ = search_path(tree)
    if not edges:
        return None

    last_direction = edges[-1][1]
    run = 0
    for _, direction in reversed(edges):
        if direction != last_direction:
            break
        run += 1

    if run < d_lookback or run == len(edges):
        return None

    suspect = edges[len(edges) - run - 1][0]
    if suspect.dtmn.is_finalized:
        return None
    return suspect


def finalization_targets(
    tree: SearchTree,
    leaf: SearchNode,
    whole_program_confirmed: bool = True
) -> Tuple[Optional[SearchNode], Optional[SearchNode]]:
    """Nodes that must be finalized before leaf {x} can be reported.

    Args:
        tree: Search tree
        leaf: Reached leaf for segment x
        whole_program_confirmed: If False, s_l needs its own (virtual) test

    Returns:
        (input node testing s_{x-1} or None when x = 1,
         output node testing s_x or None when x = l and confirmed)
    """
    if not leaf.is_leaf:
        raise SearchError(f"{leaf} is not a leaf")
    x = leaf.target_lo
    l = tree.n_segments

    input_node = tree.node_testing(x - 1) if x > 1 else None
    if x < l:
        output_node = tree.node_testing(x)
    elif whole_program_confirmed:
        output_node = None
    else:
        output_node = tree.get_virtual_output()
    return input_node, output_node


def _check_oracles(tree: SearchTree, oracles: Mapping[int, CategoricalOracle], cfg: SearchConfig) -> None:
    needed = set(tree.tested_segments())
    if not cfg.whole_program_confirmed and cfg.finalization:
        needed.add(tree.n_segments)
    missing = sorted(needed - set(oracles))
    if missing:
        raise SearchError(f"Missing oracle(s) for segment(s): {missing}")


def locate(
    tree: SearchTree,
    backend: MeasurementBackend,
    oracles: Mapping[int, CategoricalOracle],
    cfg: Optional[SearchConfig] = None
) -> LocateResult:
    """Locate the buggy segment.

    Args:
        tree: Freshly composed tree over the program under test
        backend: Measurement source for the program under test (owns its RNG)
        oracles: Segment index -> expected distribution of its output state
        cfg: Search configuration (defaults from settings.yaml)

    Returns:
        LocateResult with the located segment or Failed

    Raises:
        SearchError: If an oracle is missing
        BackendError: If the backend cannot serve a request

    Example:
        >>> tree = compose_tree(buggy)
        >>> result = locate(tree, SimulatorBackend(buggy, rng), build_oracles(reference))
        >>> result.status, result.segment
        (<LocateStatus.LOCATED: 'Located'>, 4)
    """
    cfg = cfg or SearchConfig.from_config()
    _check_oracles(tree, oracles, cfg)
    tree.reset()

    runner = BatchRunner(backend, oracles, tree.program_costs, cfg)

    while True:
        tested = suspicious_node(tree, cfg.d_lookback) if cfg.looking_back else None

        if tested is None:
            current = deepest_reachable(tree)
            if current.is_leaf:
                x = current.target_lo
                if not cfg.finalization:
                    return runner.result(LocateStatus.LOCATED, x)

                input_node, output_node = finalization_targets(tree, current, cfg.whole_program_confirmed)
                input_done = input_node is None or input_node.dtmn is Determination.RIGHT_FINALIZED
                output_done = output_node is None or output_node.dtmn is Determination.LEFT_FINALIZED

                if input_done and output_done:
                    logger.info("Located buggy segment s_%d (cost %d)", x, runner.total_cost)
                    return runner.result(LocateStatus.LOCATED, x)
                if output_node is not None and output_node is tree.virtual_output \
                        and output_node.dtmn is Determination.RIGHT_FINALIZED:
                    return runner.result(LocateStatus.FAILED, message="no bug detected in the whole program")
                tested = input_node if not input_done else output_node
            else:
                tested = current

        if runner.exhausted(tested):
            logger.info("Search failed: s_%d reached m_max=%d", tested.middle_el, cfg.m_max)
            return runner.result(
                LocateStatus.FAILED,
                message=f"s_{tested.middle_el} reached m_max without a determination"
            )

        runner.run_batch(tested, early=cfg.early_determination)


@dataclass
class WholeProgramCheck:
    """Outcome of testing the full program output s_l."""

    dtmn: Determination
    total_gate_cost: int
    total_shots: int
    trace: List[TraceRecord] = field(default_factory=list)

    @property
    def bug_detected(self) -> bool:
        return self.dtmn is Determination.LEFT_FINALIZED

    @property
    def bug_free(self) -> bool:
        return self.dtmn is Determination.RIGHT_FINALIZED


def check_whole_program(
    backend: MeasurementBackend,
    oracle: CategoricalOracle,
    cfg: Optional[SearchConfig] = None
) -> WholeProgramCheck:
    """Test s_l with strict thresholds until it finalizes or exhausts m_max.

    Args:
        backend: Measurement source for the program under test
        oracle: Expected distribution of the full program output
        cfg: Search configuration (only thresholds and budget are used)

    Returns:
        WholeProgramCheck; dtmn stays non-finalized when the budget runs out
    """
    cfg = cfg or SearchConfig.from_config()
    l = backend.program.n_segments
    node = SearchNode.for_segment(l)
    runner = BatchRunner(backend, {l: oracle}, backend.program.prefix_costs(), cfg)
    while not node.dtmn.is_finalized and not runner.exhausted(node):
        runner.run_batch(node, early=False)
    logger.debug("Whole-program test: %s after %d shots", node.dtmn.value, node.num_m)
    return WholeProgramCheck(node.dtmn, runner.total_cost, runner.total_shots, list(runner.trace))
