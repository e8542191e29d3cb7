"""Cost-based binary search tree over program segments.

Each internal node owns a target range [lo..hi] of segments and tests the
output state of its middle segment x. A detected bug sends the search to
the left child [lo..x], a passing test to the right child [x+1..hi].

The middle segment minimizes the expected search cost

    ec(x) = mean(c_lo..c_{x-1}) * log2(x') * (x'/l')
          + mean(c_{x+1}..c_{hi-1}) * log2(r') * (r'/l')
          + c_x

with x' = x-lo+1, r' = hi-x, l' = hi-lo+1 and global prefix costs c_i.
A side with a single segment contributes nothing (log2(1) = 0).
"""

import logging
import math
from typing import Any, Dict, Iterator, List, Optional, Sequence

from src.circuit.program import SegmentedProgram
from src.circuit.simulator import CountsMap
from src.stats.determination import Determination

logger = logging.getLogger(__name__)

COST_BASED = 'cost'
CENTRAL = 'central'
STRATEGIES = (COST_BASED, CENTRAL)


class SearchError(Exception):
    """Raised for invalid search trees, ranges or search configuration."""
    pass


class SearchNode:
    """Node of the search tree.

    Attributes:
        target_lo: First segment of the target range (1-based, inclusive)
        target_hi: Last segment of the target range (inclusive)
        middle_el: Tested segment x (None on leaves)
        left: Child covering [target_lo..middle_el]
        right: Child covering [middle_el+1..target_hi]
        parent: Parent node (None at the root)
        dtmn: Current determination
        num_m: Shots accumulated at this node
        counts: Accumulated measurement counts
        last_outcome: Most recent ChiSquareOutcome (None before the first test)
    """

    def __init__(self, target_lo: int, target_hi: int, parent: Optional['SearchNode'] = None):
        if target_lo > target_hi:
            raise SearchError(f"Empty target range [{target_lo}..{target_hi}]")
        self.target_lo = target_lo
        self.target_hi = target_hi
        self.parent = parent
        self.middle_el: Optional[int] = None
        self.left: Optional['SearchNode'] = None
        self.right: Optional['SearchNode'] = None
        self.dtmn = Determination.UNDETERMINED
        self.num_m = 0
        self.counts: Optional[CountsMap] = None
        self.last_outcome = None

    @classmethod
    def for_segment(cls, x: int) -> 'SearchNode':
        """Stand-alone node [x..x] that tests s_x, outside any tree."""
        node = cls(x, x)
        node.middle_el = x
        return node

    @property
    def is_leaf(self) -> bool:
        return self.target_lo == self.target_hi

    @property
    def segment(self) -> int:
        """Tested segment for internal nodes, the located segment for leaves."""
        return self.target_lo if self.is_leaf else self.middle_el

    @property
    def depth(self) -> int:
        depth = 0
        node = self
        while node.parent is not None:
            depth += 1
            node = node.parent
        return depth

    def reset(self) -> None:
        """Forget the determination and all accumulated measurements."""
        self.dtmn = Determination.UNDETERMINED
        self.num_m = 0
        self.counts = None
        self.last_outcome = None

    def iter_preorder(self) -> Iterator['SearchNode']:
        yield self
        if not self.is_leaf:
            yield from self.left.iter_preorder()
            yield from self.right.iter_preorder()

    def to_dict(self) -> Dict[str, Any]:
        """Pre-order dump {range, middle, children}."""
        children = [] if self.is_leaf else [self.left.to_dict(), self.right.to_dict()]
        return {
            'range': [self.target_lo, self.target_hi],
            'middle': self.middle_el,
            'children': children,
        }

    def __repr__(self) -> str:
        return (
            f"<SearchNode([{self.target_lo}..{self.target_hi}], middle={self.middle_el}, "
            f"dtmn={self.dtmn.value}, num_m={self.num_m})>"
        )


class SearchTree:
    """Binary search tree over segments 1..l.

    Attributes:
        root: Node covering [1..l]
        program_costs: c_1..c_l
        strategy: 'cost' (expected-cost argmin) or 'central'
    """

    def __init__(self, root: SearchNode, program_costs: Sequence[int], strategy: str = COST_BASED):
        self.root = root
        self.program_costs = list(program_costs)
        self.strategy = strategy
        self._by_segment = {
            node.middle_el: node for node in root.iter_preorder() if not node.is_leaf
        }
        self.virtual_output: Optional[SearchNode] = None

    @property
    def n_segments(self) -> int:
        return len(self.program_costs)

    def cost_of(self, x: int) -> int:
        """c_x for a tested segment."""
        return self.program_costs[x - 1]

    def nodes(self) -> List[SearchNode]:
        return list(self.root.iter_preorder())

    def internal_nodes(self) -> List[SearchNode]:
        return [n for n in self.root.iter_preorder() if not n.is_leaf]

    def leaves(self) -> List[SearchNode]:
        """Leaves in left-to-right order."""
        return [n for n in self.root.iter_preorder() if n.is_leaf]

    def node_testing(self, x: int) -> Optional[SearchNode]:
        """Internal node whose tested segment is x (None if there is none)."""
        return self._by_segment.get(x)

    def tested_segments(self) -> List[int]:
        return sorted(self._by_segment)

    def get_virtual_output(self) -> SearchNode:
        """Stand-alone node testing s_l, created on first use."""
        if self.virtual_output is None:
            self.virtual_output = SearchNode.for_segment(self.n_segments)
        return self.virtual_output

    def reset(self) -> None:
        """Set every node back to Undetermined with no measurements."""
        for node in self.root.iter_preorder():
            node.reset()
        if self.virtual_output is not None:
            self.virtual_output.reset()

    def to_dict(self) -> Dict[str, Any]:
        return self.root.to_dict()

    def __repr__(self) -> str:
        return f"<SearchTree(l={self.n_segments}, strategy={self.strategy}, root={self.root.middle_el})>"


def _mean(values: Sequence[int]) -> float:
    return sum(values) / len(values)


def expected_search_cost(costs: Sequence[int], x: int, lo: int, hi: int) -> float:
    """Expected cost of locating the bug in [lo..hi] when s_x is tested first.

    Args:
        costs: Global prefix costs c_1..c_l (costs[i-1] is c_i)
        x: Candidate middle segment (lo <= x <= hi-1)
        lo: First segment of the target range
        hi: Last segment of the target range

    Returns:
        Non-negative expected cost

    Raises:
        SearchError: If the candidate range is empty or x is outside it

    Example:
        >>> expected_search_cost([1, 2, 3, 4], 2, 1, 4)
        4.0
    """
    if hi <= lo:
        raise SearchError(f"Range [{lo}..{hi}] has no candidate middle segment")
    if not lo <= x <= hi - 1:
        raise SearchError(f"Candidate {x} outside [{lo}..{hi - 1}]")
    if lo < 1 or hi > len(costs):
        raise SearchError(f"Range [{lo}..{hi}] exceeds the {len(costs)} known costs")

    total_len = hi - lo + 1
    left_len = x - lo + 1
    right_len = hi - x

    left_term = 0.0
    if left_len > 1:
        left_mean = _mean(costs[lo - 1:x - 1])
        left_term = left_mean * math.log2(left_len) * (left_len / total_len)

    right_term = 0.0
    if right_len > 1:
        right_mean = _mean(costs[x:hi - 1])
        right_term = right_mean * math.log2(right_len) * (right_len / total_len)

    return left_term + right_term + costs[x - 1]


def select_middle(costs: Sequence[int], lo: int, hi: int) -> int:
    """Return the x in [lo..hi-1] minimizing expected_search_cost (smallest x on ties).

    Example:
        >>> select_middle([1, 2, 3, 4], 1, 4)
        1
    """
    if hi <= lo:
        raise SearchError(f"Range [{lo}..{hi}] has no candidate middle segment")
    best_x = lo
    best_cost = expected_search_cost(costs, lo, lo, hi)
    for x in range(lo + 1, hi):
        cost = expected_search_cost(costs, x, lo, hi)
        if cost < best_cost:
            best_x, best_cost = x, cost
    return best_x


def select_central(lo: int, hi: int) -> int:
    """Naive binary search middle: lo + floor((hi - lo) / 2)."""
    if hi <= lo:
        raise SearchError(f"Range [{lo}..{hi}] has no candidate middle segment")
    return lo + (hi - lo) // 2


def compose_tree(program: SegmentedProgram, strategy: str = COST_BASED) -> SearchTree:
    """Build the search tree for a program.

    Args:
        program: Program under test (l >= 2)
        strategy: 'cost' for expected-cost argmin, 'central' for naive binary search

    Returns:
        SearchTree with every node Undetermined and num_m = 0

    Raises:
        SearchError: If l < 2 or the strategy is unknown

    Example:
        >>> tree = compose_tree(program_with_gate_counts([1, 1, 1, 1]))
        >>> tree.root.middle_el, tree.root.right.target_lo
        (1, 2)
    """
    return compose_tree_from_costs(program.prefix_costs(), strategy)


def compose_tree_from_costs(costs: Sequence[int], strategy: str = COST_BASED) -> SearchTree:
    """Build the search tree from prefix costs c_1..c_l alone."""
    if strategy not in STRATEGIES:
        raise SearchError(f"Unknown tree strategy '{strategy}'. Must be one of: {STRATEGIES}")
    if len(costs) < 2:
        raise SearchError(f"Need at least 2 segments to search, got {len(costs)}")

    costs = list(costs)
    root = SearchNode(1, len(costs))
    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        if strategy == COST_BASED:
            node.middle_el = select_middle(costs, node.target_lo, node.target_hi)
        else:
            node.middle_el = select_central(node.target_lo, node.target_hi)
        node.left = SearchNode(node.target_lo, node.middle_el, parent=node)
        node.right = SearchNode(node.middle_el + 1, node.target_hi, parent=node)
        stack.extend([node.right, node.left])

    tree = SearchTree(root, costs, strategy)
    logger.debug("Composed %s", tree)
    return tree
