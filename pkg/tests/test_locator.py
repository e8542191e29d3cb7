"""Tests for the locate loop, its node-selection rules and the cost ledger."""

import json

import pytest

from src.circuit.gates import Gate, GateKind
from src.circuit.program import from_gate_lists
from src.circuit.simulator import CountsMap
from src.harness.generator import (
    STREAM_BUG,
    STREAM_MEASURE,
    GenSpec,
    build_oracles,
    derive_rng,
    generate_program,
    inject_bug,
)
from src.search.backends import MeasurementBackend, PerfectEvidenceBackend, SimulatorBackend
from src.search.locator import (
    BatchRunner,
    LocateStatus,
    SearchConfig,
    check_whole_program,
    deepest_reachable,
    finalization_targets,
    locate,
    search_path,
    suspicious_node,
)
from src.search.tree import CENTRAL, SearchError, compose_tree
from src.stats.chi_square import CategoricalOracle
from src.stats.determination import Determination

FAIR_COIN = CategoricalOracle({'0': 0.5, '1': 0.5})
EXACT = {'0': 0.5, '1': 0.5}
BUGGY = {'0': 1.0}


class ScriptedBackend(MeasurementBackend):
    """Fixed per-prefix outcome proportions, scaled to each batch."""

    def __init__(self, program, evidence, default=None):
        super().__init__(program)
        self.evidence = evidence
        self.default = default or EXACT

    def _measure(self, k, shots):
        proportions = self.evidence.get(k, self.default)
        return CountsMap(self.n_qubits, {b: int(round(f * shots)) for b, f in proportions.items()})


def set_path(tree, *moves):
    """Give the nodes along a path from the root the listed determinations."""
    node = tree.root
    for dtmn in moves:
        node.dtmn = dtmn
        node = node.left if dtmn.is_left else node.right
    return node


def assert_finalized_nodes_not_remeasured(result):
    """No batch goes to a segment's node after that node has finalized."""
    finalized = set()
    for record in result.trace:
        assert record.node_segment not in finalized
        if record.dtmn.endswith('Finalized'):
            finalized.add(record.node_segment)


# ============================================================================
# SearchConfig
# ============================================================================

class TestSearchConfig:
    """Tests for search configuration."""

    def test_defaults_from_settings(self):
        cfg = SearchConfig.from_config()
        assert (cfg.m_unit, cfg.m_max, cfg.d_lookback) == (100, 100000, 3)
        assert cfg.whole_program_confirmed
        assert not cfg.reset_on_return

    def test_overrides_split_thresholds(self):
        cfg = SearchConfig.from_config(sig=0.01, m_max=500)
        assert cfg.thresholds.sig == 0.01
        assert cfg.m_max == 500

    def test_measurement_preset(self):
        cfg = SearchConfig.from_config(measurement_preset='increased')
        assert (cfg.m_unit, cfg.m_max) == (10000, 10000000)

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            SearchConfig.from_config(shots_per_node=5)

    def test_unknown_measurement_preset(self):
        with pytest.raises(ValueError):
            SearchConfig.from_config(measurement_preset='huge')

    def test_budget_validation(self):
        with pytest.raises(SearchError):
            SearchConfig(m_unit=200, m_max=100)
        with pytest.raises(SearchError):
            SearchConfig(m_unit=0)
        with pytest.raises(SearchError):
            SearchConfig(d_lookback=1)

    def test_ablations_switch_one_approach(self, default_cfg):
        assert not default_cfg.with_ablation('no_early').early_determination
        assert not default_cfg.with_ablation('no_finalization').finalization
        no_lookback = default_cfg.with_ablation('no_lookback')
        assert not no_lookback.looking_back
        assert no_lookback.early_determination and no_lookback.finalization
        with pytest.raises(ValueError):
            default_cfg.with_ablation('no_tree')

    def test_strict_disables_everything(self, default_cfg):
        strict = default_cfg.strict()
        assert not (strict.early_determination or strict.finalization or strict.looking_back)
        assert strict.thresholds == default_cfg.thresholds


# ============================================================================
# Node selection
# ============================================================================

def test_deepest_reachable_all_undetermined(chain):
    """Test an untouched tree stops at the root."""
    tree = compose_tree(chain(8), CENTRAL)
    assert deepest_reachable(tree) is tree.root


def test_deepest_reachable_one_step(chain):
    """Test root LeftEarly with an undetermined left child stops at the left child."""
    tree = compose_tree(chain(8), CENTRAL)
    tree.root.dtmn = Determination.LEFT_EARLY
    assert deepest_reachable(tree) is tree.root.left


def test_deepest_reachable_follows_updated_determination(chain):
    """Test the walk restarts from the root after an upper node flips."""
    tree = compose_tree(chain(8), CENTRAL)
    tree.root.dtmn = Determination.LEFT_EARLY
    tree.root.left.dtmn = Determination.RIGHT_FINALIZED
    tree.root.dtmn = Determination.RIGHT_EARLY
    assert deepest_reachable(tree) is tree.root.right


def test_search_path_edges(chain):
    """Test edges are (emitting node, direction) pairs."""
    tree = compose_tree(chain(8), CENTRAL)
    set_path(tree, Determination.LEFT_EARLY, Determination.RIGHT_EARLY)
    edges, stop = search_path(tree)

    assert [d for _, d in edges] == ['L', 'R']
    assert edges[0][0] is tree.root
    assert (stop.target_lo, stop.target_hi) == (3, 4)


def test_suspicious_node_after_long_run(chain):
    """Test path [R, L, L, L] with D = 3 suspects the node that emitted R."""
    tree = compose_tree(chain(16), CENTRAL)
    set_path(tree, Determination.RIGHT_EARLY, Determination.LEFT_EARLY,
             Determination.LEFT_EARLY, Determination.LEFT_EARLY)
    assert suspicious_node(tree, 3) is tree.root


def test_suspicious_node_skips_finalized(chain):
    """Test a finalized suspect is never looked back to."""
    tree = compose_tree(chain(16), CENTRAL)
    set_path(tree, Determination.RIGHT_FINALIZED, Determination.LEFT_EARLY,
             Determination.LEFT_EARLY, Determination.LEFT_EARLY)
    assert suspicious_node(tree, 3) is None


def test_suspicious_node_short_run(chain):
    """Test path [L, R, R] with D = 3 has no suspect."""
    tree = compose_tree(chain(8), CENTRAL)
    set_path(tree, Determination.LEFT_EARLY, Determination.RIGHT_EARLY, Determination.RIGHT_EARLY)
    assert suspicious_node(tree, 3) is None


def test_suspicious_node_needs_opposite_edge(chain):
    """Test path [L, L, L] with D = 3 has no suspect."""
    tree = compose_tree(chain(8), CENTRAL)
    set_path(tree, Determination.LEFT_EARLY, Determination.LEFT_EARLY, Determination.LEFT_EARLY)
    assert suspicious_node(tree, 3) is None


def test_finalization_targets_middle_leaf(chain):
    """Test leaf {s_3} over [1..4] needs s_2 and s_3."""
    tree = compose_tree(chain(4))
    leaf = tree.leaves()[2]
    input_node, output_node = finalization_targets(tree, leaf)
    assert input_node.middle_el == 2
    assert output_node.middle_el == 3


def test_finalization_targets_first_leaf(chain):
    """Test leaf {s_1} has no input node."""
    tree = compose_tree(chain(4))
    input_node, output_node = finalization_targets(tree, tree.leaves()[0])
    assert input_node is None
    assert output_node.middle_el == 1


def test_finalization_targets_last_leaf(chain):
    """Test leaf {s_l} needs s_l only when the whole program is unconfirmed."""
    tree = compose_tree(chain(4))
    leaf = tree.leaves()[-1]

    input_node, output_node = finalization_targets(tree, leaf, whole_program_confirmed=True)
    assert input_node.middle_el == 3
    assert output_node is None

    _, virtual = finalization_targets(tree, leaf, whole_program_confirmed=False)
    assert virtual is tree.virtual_output
    assert virtual.middle_el == 4


def test_finalization_targets_rejects_internal_node(chain):
    """Test only leaves have finalization targets."""
    tree = compose_tree(chain(4))
    with pytest.raises(SearchError):
        finalization_targets(tree, tree.root)


# ============================================================================
# Locate with perfect evidence
# ============================================================================

@pytest.mark.parametrize("l", range(2, 9))
def test_locate_finds_every_bug_position(chain, chain_oracles, l):
    """Test perfect evidence locates s_j for every j in 1..l."""
    oracles = chain_oracles(l)
    for j in range(1, l + 1):
        buggy = chain(l, bug_at=j)
        result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), oracles)

        assert result.status is LocateStatus.LOCATED, (l, j, result.message)
        assert result.segment == j


def test_locate_uses_one_batch_per_node(chain, chain_oracles, default_cfg):
    """Test perfect evidence never tests a node twice."""
    buggy = chain(6, bug_at=4)
    result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), chain_oracles(6), default_cfg)

    per_segment = result.shots_per_segment()
    assert all(shots == default_cfg.m_unit for shots in per_segment.values())
    assert {3, 4} <= set(per_segment)


def test_bug_free_program_reports_last_segment(chain, chain_oracles, default_cfg):
    """Test a bug-free program with a confirmed whole-program failure reports s_l."""
    program = chain(5)
    result = locate(compose_tree(program), PerfectEvidenceBackend(program), chain_oracles(5), default_cfg)

    assert result.located
    assert result.segment == 5


def test_bug_free_program_without_confirmation_fails(chain, chain_oracles):
    """Test the virtual output node finds no bug in the whole program."""
    program = chain(5)
    cfg = SearchConfig(whole_program_confirmed=False)
    result = locate(compose_tree(program), PerfectEvidenceBackend(program), chain_oracles(5), cfg)

    assert result.status is LocateStatus.FAILED
    assert result.segment is None
    assert "no bug" in result.message
    assert result.trace[-1].node_segment == 5


def test_unconfirmed_whole_program_still_locates_last_segment(chain, chain_oracles):
    """Test a bug in s_l is confirmed by the virtual output node."""
    buggy = chain(5, bug_at=5)
    cfg = SearchConfig(whole_program_confirmed=False)
    result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), chain_oracles(5), cfg)

    assert result.segment == 5
    assert result.trace[-1].node_segment == 5


def test_locate_without_finalization_stops_at_leaf(chain, chain_oracles, default_cfg):
    """Test the no_finalization ablation reports the first leaf reached."""
    buggy = chain(6, bug_at=2)
    cfg = default_cfg.with_ablation('no_finalization')
    result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), chain_oracles(6), cfg)
    assert result.segment == 2


def test_locate_fails_when_budget_runs_out(chain, fixed_backend):
    """Test p = 0.317 after the whole budget is Undetermined and fails."""
    program = chain(4)
    backend = fixed_backend(program, {'0': 0.55, '1': 0.45})
    oracles = {k: FAIR_COIN for k in range(1, 5)}
    cfg = SearchConfig(m_unit=100, m_max=100)

    result = locate(compose_tree(program), backend, oracles, cfg)

    assert result.status is LocateStatus.FAILED
    assert result.total_shots == 100
    assert result.trace[0].dtmn == 'Undetermined'
    assert result.trace[0].p_value == pytest.approx(0.3173, abs=1e-3)


def test_locate_missing_oracle(chain, chain_oracles):
    """Test a missing tested-segment oracle is reported before measuring."""
    buggy = chain(4, bug_at=2)
    oracles = chain_oracles(4)
    del oracles[1]
    backend = PerfectEvidenceBackend(buggy)

    with pytest.raises(SearchError):
        locate(compose_tree(buggy), backend, oracles)
    assert backend.requests == 0


def test_locate_resets_tree(chain, chain_oracles, default_cfg):
    """Test locating twice on one tree gives the same answer."""
    buggy = chain(6, bug_at=3)
    tree = compose_tree(buggy)
    first = locate(tree, PerfectEvidenceBackend(buggy), chain_oracles(6), default_cfg)
    second = locate(tree, PerfectEvidenceBackend(buggy), chain_oracles(6), default_cfg)
    assert first.to_dict() == second.to_dict()


# ============================================================================
# Looking back and re-testing
# ============================================================================

def _misleading_root_setup(chain):
    """32 segments on a central tree where s_16 first looks bug-free.

    The bug is in s_3, so every prefix from s_3 on is clearly wrong except
    s_16, whose 52/48 split reads RightEarly after one batch and only turns
    LeftEarly after 1700 shots.
    """
    program = chain(32)
    evidence = {k: BUGGY for k in range(3, 33)}
    evidence[16] = {'0': 0.52, '1': 0.48}
    backend = ScriptedBackend(program, evidence)
    oracles = {k: FAIR_COIN for k in range(1, 33)}
    return compose_tree(program, CENTRAL), backend, oracles


def test_looking_back_retests_suspicious_root(chain, default_cfg):
    """Test a run of three Left edges sends the search back to the root."""
    tree, backend, oracles = _misleading_root_setup(chain)
    result = locate(tree, backend, oracles, default_cfg)

    segments = [record.node_segment for record in result.trace]
    assert segments[:5] == [16, 24, 20, 18, 16]
    assert result.trace[0].dtmn == 'RightEarly'
    assert result.located
    assert result.segment == 3


def test_without_looking_back_descends_first(chain, default_cfg):
    """Test the no_lookback ablation keeps descending past the run."""
    tree, backend, oracles = _misleading_root_setup(chain)
    result = locate(tree, backend, oracles, default_cfg.with_ablation('no_lookback'))

    segments = [record.node_segment for record in result.trace]
    assert segments[:5] == [16, 24, 20, 18, 17]
    assert result.segment == 3


def test_reset_on_return_clears_descendants(chain, default_cfg):
    """Test a flipped node resets the determinations below it."""
    program = chain(8)
    tree = compose_tree(program, CENTRAL)
    set_path(tree, Determination.RIGHT_EARLY, Determination.LEFT_EARLY)
    cfg = SearchConfig(thresholds=default_cfg.thresholds, reset_on_return=True)
    runner = BatchRunner(ScriptedBackend(program, {4: BUGGY}), {4: FAIR_COIN}, program.prefix_costs(), cfg)

    assert runner.run_batch(tree.root, early=True) is Determination.LEFT_FINALIZED
    assert tree.root.right.dtmn is Determination.UNDETERMINED


def test_restricted_oracle_without_retained_shots(chain, fixed_backend, default_cfg):
    """Test a batch that misses every declared basis leaves the node Undetermined."""
    program = chain(2)
    tree = compose_tree(program)
    oracles = {1: CategoricalOracle({'1': 0.5}, restricted=True)}
    runner = BatchRunner(fixed_backend(program, {'0': 1.0}), oracles, program.prefix_costs(), default_cfg)

    assert runner.run_batch(tree.root, early=True) is Determination.UNDETERMINED
    assert runner.trace[0].p_value is None
    assert runner.total_shots == default_cfg.m_unit


def test_flip_keeps_descendants_by_default(chain, default_cfg):
    """Test descendants keep their determinations when resets are off."""
    program = chain(8)
    tree = compose_tree(program, CENTRAL)
    set_path(tree, Determination.RIGHT_EARLY, Determination.LEFT_EARLY)
    runner = BatchRunner(ScriptedBackend(program, {4: BUGGY}), {4: FAIR_COIN}, program.prefix_costs(), default_cfg)

    runner.run_batch(tree.root, early=True)
    assert tree.root.right.dtmn is Determination.LEFT_EARLY


def test_reset_on_return_keeps_finalized_descendants(chain, default_cfg):
    """Test a flip never clears a Finalized determination below it."""
    program = chain(8)
    tree = compose_tree(program, CENTRAL)
    set_path(tree, Determination.RIGHT_EARLY, Determination.LEFT_FINALIZED)
    cfg = SearchConfig(thresholds=default_cfg.thresholds, reset_on_return=True)
    runner = BatchRunner(ScriptedBackend(program, {4: BUGGY}), {4: FAIR_COIN}, program.prefix_costs(), cfg)

    runner.run_batch(tree.root, early=True)
    assert tree.root.right.dtmn is Determination.LEFT_FINALIZED


# ============================================================================
# Budget and cost ledger
# ============================================================================

def test_budget_and_ledger_over_seeded_runs():
    """Test num_m <= m_max and cost = sum of shots * c_x over 50 random cases."""
    cfg = SearchConfig(m_unit=50, m_max=200)
    for seed in range(50):
        spec = GenSpec(n_qubits=2, n_segments=5, n_gates=15, seed=seed)
        reference = generate_program(spec)
        buggy, _ = inject_bug(reference, derive_rng(seed, STREAM_BUG))
        backend = SimulatorBackend(buggy, derive_rng(seed, STREAM_MEASURE, 0, 0))
        costs = buggy.prefix_costs()

        result = locate(compose_tree(buggy), backend, build_oracles(reference), cfg)

        assert all(shots <= cfg.m_max for shots in result.shots_per_segment().values())
        assert all(r.shots <= cfg.m_unit for r in result.trace)
        assert_finalized_nodes_not_remeasured(result)
        assert result.total_gate_cost == result.recompute_cost(costs)
        assert result.total_shots == sum(r.shots for r in result.trace)
        cumulative = [r.cumulative_cost for r in result.trace]
        assert cumulative == sorted(cumulative)
        if result.located:
            assert 1 <= result.segment <= spec.n_segments
        else:
            assert result.segment is None


def test_identical_seeds_give_identical_results():
    """Test the measurement stream fully determines a search."""
    spec = GenSpec(n_qubits=2, n_segments=6, n_gates=18, seed=4)
    reference = generate_program(spec)
    buggy, _ = inject_bug(reference, derive_rng(4, STREAM_BUG))
    oracles = build_oracles(reference)

    runs = [
        locate(compose_tree(buggy), SimulatorBackend(buggy, derive_rng(4, STREAM_MEASURE, 0, 0)), oracles)
        for _ in range(2)
    ]
    assert runs[0].to_dict() == runs[1].to_dict()
    assert runs[0].trace == runs[1].trace


def test_finalized_suspect_is_not_measured_again(chain, default_cfg):
    """Test a RightFinalized root behind three Left edges is never re-tested."""
    program = chain(16)
    backend = ScriptedBackend(program, {k: BUGGY for k in range(9, 17)})
    oracles = {k: FAIR_COIN for k in range(1, 17)}

    result = locate(compose_tree(program, CENTRAL), backend, oracles, default_cfg)

    assert [r.node_segment for r in result.trace] == [8, 12, 10, 9]
    assert result.trace[0].dtmn == 'RightFinalized'
    assert result.segment == 9
    assert_finalized_nodes_not_remeasured(result)


def test_looking_back_never_remeasures_finalized_nodes(chain, default_cfg):
    """Test Finalized nodes receive no batches after they finalize."""
    tree, backend, oracles = _misleading_root_setup(chain)
    result = locate(tree, backend, oracles, default_cfg)

    assert_finalized_nodes_not_remeasured(result)
    assert all(r.shots <= default_cfg.m_unit for r in result.trace)


def test_single_shot_budget_fails_on_ten_qubits(default_cfg):
    """Test one shot per node can never finalize a 1023-df comparison."""
    uniform = [Gate(GateKind.H, (q,)) for q in range(10)]
    phases = [[Gate(GateKind.RZ, (q,), (0.1 * (s + 1),)) for q in range(0, 10, 2)] for s in range(5)]
    reference = from_gate_lists(10, [uniform] + phases)
    buggy = reference.replace_segment(4, reference.segment(4).replace_gate(0, Gate(GateKind.RX, (0,), (1.3,))))
    cfg = SearchConfig(thresholds=default_cfg.thresholds, m_unit=1, m_max=1)

    for seed in range(5):
        backend = SimulatorBackend(buggy, derive_rng(seed, STREAM_MEASURE, 0, 0))
        result = locate(compose_tree(buggy), backend, build_oracles(reference), cfg)

        assert result.status is LocateStatus.FAILED
        assert result.segment is None
        assert all(r.dtmn == 'Undetermined' for r in result.trace)


def test_trace_jsonl(tmp_path, chain, chain_oracles):
    """Test one sorted-key JSON object per batch."""
    buggy = chain(6, bug_at=5)
    result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), chain_oracles(6))
    path = tmp_path / "trace.jsonl"
    result.write_trace(path)

    lines = path.read_text().splitlines()
    assert len(lines) == len(result.trace)
    first = json.loads(lines[0])
    assert list(first) == sorted(first)
    assert first['node_segment'] == result.trace[0].node_segment
    assert json.loads(lines[-1])['cumulative_cost'] == result.total_gate_cost


def test_result_to_dict(chain, chain_oracles):
    """Test the result JSON fields."""
    buggy = chain(3, bug_at=2)
    result = locate(compose_tree(buggy), PerfectEvidenceBackend(buggy), chain_oracles(3))
    data = result.to_dict()

    assert data['status'] == 'Located'
    assert data['segment'] == 2
    assert data['batches'] == len(result.trace)
    assert data['message'] is None


# ============================================================================
# Whole-program test
# ============================================================================

def test_check_whole_program_detects_bug(chain, chain_oracles):
    """Test a buggy output is LeftFinalized."""
    buggy = chain(4, bug_at=2)
    check = check_whole_program(PerfectEvidenceBackend(buggy), chain_oracles(4)[4])

    assert check.bug_detected
    assert not check.bug_free
    assert check.total_gate_cost == check.total_shots * 4


def test_check_whole_program_passes_bug_free(chain, chain_oracles):
    """Test a bug-free output is RightFinalized."""
    program = chain(4)
    check = check_whole_program(PerfectEvidenceBackend(program), chain_oracles(4)[4])
    assert check.bug_free


def test_check_whole_program_undecided_within_budget(chain, fixed_backend):
    """Test an inconclusive output stays non-finalized once m_max is spent."""
    program = chain(2)
    backend = fixed_backend(program, {'0': 0.55, '1': 0.45})
    check = check_whole_program(backend, FAIR_COIN, SearchConfig(m_unit=100, m_max=100))

    assert not check.bug_detected and not check.bug_free
    assert check.total_shots == 100
