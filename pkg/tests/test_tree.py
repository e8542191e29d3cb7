"""Tests for expected-cost middle selection and tree composition."""

import pytest

from src.search.tree import (
    CENTRAL,
    COST_BASED,
    SearchError,
    SearchNode,
    compose_tree,
    compose_tree_from_costs,
    expected_search_cost,
    select_central,
    select_middle,
)

COSTS = [1, 2, 3, 4]


# ============================================================================
# Expected cost
# ============================================================================

@pytest.mark.parametrize("x,expected", [
    (1, 3.9718),
    (2, 4.0),
    (3, 4.7831),
])
def test_expected_search_cost(x, expected):
    """Test ec(x) over costs [1, 2, 3, 4] and range [1..4]."""
    assert expected_search_cost(COSTS, x, 1, 4) == pytest.approx(expected, abs=1e-4)


def test_expected_cost_rejects_bad_candidate():
    """Test x must lie in [lo..hi-1]."""
    with pytest.raises(SearchError):
        expected_search_cost(COSTS, 4, 1, 4)
    with pytest.raises(SearchError):
        expected_search_cost(COSTS, 2, 3, 3)


def test_select_middle_minimizes_cost():
    """Test s_1 wins for costs [1, 2, 3, 4]."""
    assert select_middle(COSTS, 1, 4) == 1


def test_select_middle_two_segment_range():
    """Test [k..k+1] has k as its only candidate."""
    assert select_middle([5, 9, 20, 21], 3, 4) == 3


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_select_middle_matches_exhaustive_scan(m):
    """Test the argmin on uniform gate counts over [1..2^m]."""
    l = 2 ** m
    costs = list(range(1, l + 1))
    scan = min(range(1, l), key=lambda x: (expected_search_cost(costs, x, 1, l), x))
    assert select_middle(costs, 1, l) == scan


def test_select_central():
    """Test lo + floor((hi - lo) / 2)."""
    assert select_central(1, 4) == 2
    assert select_central(3, 4) == 3
    assert select_central(1, 10) == 5


# ============================================================================
# Tree composition
# ============================================================================

def test_two_segment_tree(chain):
    """Test l = 2 gives a root testing s_1 with leaves {s_1} and {s_2}."""
    tree = compose_tree(chain(2))
    assert tree.root.middle_el == 1
    assert [(leaf.target_lo, leaf.target_hi) for leaf in tree.leaves()] == [(1, 1), (2, 2)]


def test_unit_cost_tree_root(chain):
    """Test l = 4 with g = [1, 1, 1, 1] roots at s_1 with right child [2..4]."""
    tree = compose_tree(chain(4))
    assert tree.root.middle_el == 1
    assert (tree.root.right.target_lo, tree.root.right.target_hi) == (2, 4)


def test_central_tree_root(chain):
    """Test the naive tree for l = 4 roots at s_2."""
    tree = compose_tree(chain(4), CENTRAL)
    assert tree.root.middle_el == 2
    assert tree.strategy == CENTRAL


@pytest.mark.parametrize("strategy", [COST_BASED, CENTRAL])
@pytest.mark.parametrize("gates", [[1, 1], [3, 1, 2], [1] * 7, [5, 1, 1, 2, 8, 1, 3, 2, 1, 4]])
def test_tree_partitions_segments(chain, strategy, gates):
    """Test leaf count, unique middles and child ranges for every node."""
    program = chain(len(gates), gates_per_segment=gates)
    tree = compose_tree(program, strategy)
    l = len(gates)

    leaves = tree.leaves()
    assert [leaf.target_lo for leaf in leaves] == list(range(1, l + 1))
    assert all(leaf.is_leaf and leaf.middle_el is None for leaf in leaves)

    internal = tree.internal_nodes()
    assert len(internal) == l - 1
    assert sorted(n.middle_el for n in internal) == list(range(1, l))
    assert tree.tested_segments() == list(range(1, l))

    for node in internal:
        assert node.target_lo <= node.middle_el < node.target_hi
        assert (node.left.target_lo, node.left.target_hi) == (node.target_lo, node.middle_el)
        assert (node.right.target_lo, node.right.target_hi) == (node.middle_el + 1, node.target_hi)
        assert node.left.parent is node and node.right.parent is node


def test_fresh_tree_is_undetermined(chain):
    """Test every node starts with no measurements."""
    tree = compose_tree(chain(5))
    assert all(node.num_m == 0 and node.dtmn.value == 'Undetermined' for node in tree.nodes())


def test_node_testing_lookup(chain):
    """Test node_testing finds the internal node for each tested segment."""
    tree = compose_tree(chain(6))
    for x in range(1, 6):
        assert tree.node_testing(x).middle_el == x
    assert tree.node_testing(6) is None


def test_tree_to_dict(chain):
    """Test the pre-order dump for l = 2."""
    tree = compose_tree(chain(2))
    assert tree.to_dict() == {
        'range': [1, 2],
        'middle': 1,
        'children': [
            {'range': [1, 1], 'middle': None, 'children': []},
            {'range': [2, 2], 'middle': None, 'children': []},
        ],
    }


def test_virtual_output_is_outside_tree(chain):
    """Test the stand-alone s_l node is created once and not part of the tree."""
    tree = compose_tree(chain(3))
    node = tree.get_virtual_output()

    assert node is tree.get_virtual_output()
    assert node.middle_el == 3
    assert node not in tree.nodes()


def test_compose_rejects_unknown_strategy():
    """Test the strategy name is validated."""
    with pytest.raises(SearchError):
        compose_tree_from_costs(COSTS, 'random')


def test_compose_needs_two_segments():
    """Test a single cost cannot form a tree."""
    with pytest.raises(SearchError):
        compose_tree_from_costs([3])


def test_empty_node_range():
    """Test a node cannot cover an empty range."""
    with pytest.raises(SearchError):
        SearchNode(3, 2)
