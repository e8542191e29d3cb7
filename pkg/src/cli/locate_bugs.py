#!/usr/bin/env python3
"""CLI for generating programs, locating buggy segments and running experiments.

Usage:
    python -m src.cli.locate_bugs generate -o circuit.json
    python -m src.cli.locate_bugs inject circuit.json -o buggy.json --injection injection.json
    python -m src.cli.locate_bugs oracles circuit.json -d oracles/
    python -m src.cli.locate_bugs locate buggy.json -d oracles/ --trace trace.jsonl
    python -m src.cli.locate_bugs experiment experiment.yaml --csv table.csv
    python -m src.cli.locate_bugs history proposed --segments 10
    python -m src.cli.locate_bugs delete 3
    python -m src.cli.locate_bugs risk --alpha 0.05 --beta 0.2 --w 1 --path-len 3 --x 5 --l 10

Exit codes:
    0  Located / command complete
    1  Usage, config or input error
    2  Search failed
"""

import sys
import argparse
import json
import logging
from pathlib import Path
from typing import List, Optional

from src.circuit.gates import CircuitError
from src.circuit.program import dumps_canonical, load_program, save_program
from src.harness.experiment import CorpusStarvationError, ExperimentSettings, run_experiment
from src.harness.generator import (
    STREAM_BUG,
    STREAM_MEASURE,
    STREAM_ORACLE,
    STREAM_PROGRAM,
    GenSpec,
    build_oracles,
    derive_rng,
    generate_program,
    inject_bugs,
)
from src.harness.risk import return_probability
from src.search.backends import BackendError, SimulatorBackend
from src.search.locator import SearchConfig, locate, check_whole_program
from src.search.tree import CENTRAL, COST_BASED, SearchError, compose_tree
from src.stats.chi_square import StatTestError, load_oracles, save_oracles
from src.utils.config import config
from src.utils.logging_setup import configure_logging
from src.utils.validation import ValidationError, load_config_file, validate_locate_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

USER_ERRORS = (
    ValidationError, CircuitError, SearchError, StatTestError, BackendError,
    CorpusStarvationError, FileNotFoundError, ValueError,
)


def cmd_generate(args) -> int:
    seed = config.resolve_seed(args.seed)
    spec = GenSpec.from_config(seed=seed, n_qubits=args.qubits, n_segments=args.segments, n_gates=args.gates)
    program = generate_program(spec, derive_rng(seed, STREAM_PROGRAM, 0))
    save_program(program, args.output)
    print(f"✅ Generated {program!r} -> {args.output}")
    return EXIT_OK


def cmd_inject(args) -> int:
    seed = config.resolve_seed(args.seed)
    program = load_program(args.circuit)
    buggy, injections = inject_bugs(program, derive_rng(seed, STREAM_BUG, 0), args.bugs)
    save_program(buggy, args.output)
    args.injection.write_text(
        dumps_canonical({'injections': [i.to_dict() for i in injections]}), encoding='utf-8'
    )
    segments = ', '.join(f"s_{i.segment}" for i in injections)
    print(f"✅ Injected {len(injections)} bug(s) in {segments} -> {args.output}")
    return EXIT_OK


def cmd_oracles(args) -> int:
    reference = load_program(args.circuit)
    if args.limit_bases is None:
        oracles = build_oracles(reference)
    else:
        seed = config.resolve_seed(args.seed)
        oracles = build_oracles(reference, args.limit_bases, derive_rng(seed, STREAM_ORACLE, 0))
    save_oracles(oracles, args.directory)
    print(f"✅ Wrote {len(oracles)} oracle files to {args.directory}")
    return EXIT_OK


def cmd_tree(args) -> int:
    program = load_program(args.circuit)
    tree = compose_tree(program, CENTRAL if args.central else COST_BASED)
    print(json.dumps(tree.to_dict(), indent=2))
    return EXIT_OK


def _search_config(config_path: Optional[Path]):
    data = load_config_file(config_path) if config_path else {}
    validate_locate_config(data, raise_exception=True)
    cfg = SearchConfig.from_config(
        data.get('threshold_preset'),
        data.get('measurement_preset'),
        **data.get('search', {})
    )
    return cfg, data.get('tree', COST_BASED), data.get('seed')


def cmd_locate(args) -> int:
    program = load_program(args.circuit)
    oracles = load_oracles(args.directory)
    cfg, strategy, config_seed = _search_config(args.config)
    seed = config.resolve_seed(args.seed if args.seed is not None else config_seed)
    backend = SimulatorBackend(program, derive_rng(seed, STREAM_MEASURE, 0, 0))

    if args.check_whole:
        l = program.n_segments
        if l not in oracles:
            raise SearchError(f"Missing oracle for segment {l}")
        check = check_whole_program(backend, oracles[l], cfg)
        if check.bug_free:
            print(f"✅ No bug detected in the whole program ({check.total_shots} shots)")
            return EXIT_OK
        if not check.bug_detected:
            print(f"❌ Whole-program test undecided after {check.total_shots} shots")
            return EXIT_FAILED

    result = locate(compose_tree(program, strategy), backend, oracles, cfg)

    if args.output:
        args.output.write_text(dumps_canonical(result.to_dict()), encoding='utf-8')
    if args.trace:
        result.write_trace(args.trace)

    if result.located:
        print(f"✅ Located buggy segment s_{result.segment} "
              f"(cost {result.total_gate_cost} gates, {result.total_shots} shots)")
        return EXIT_OK
    print(f"❌ Search failed: {result.message} (cost {result.total_gate_cost} gates)")
    return EXIT_FAILED


def cmd_experiment(args) -> int:
    data = load_config_file(args.config)
    if args.workers is not None:
        data['workers'] = args.workers
    settings = ExperimentSettings.from_dict(data, seed=args.seed)
    report = run_experiment(settings)

    print(report.format_summary())
    if args.output:
        args.output.write_text(report.to_json(), encoding='utf-8')
    if args.csv:
        report.write_csv(args.csv)
    if args.record:
        from src.database.init_db import init_database
        from src.database.operations import save_report
        from src.database.session import get_session

        init_database()
        with get_session() as session:
            experiment = save_report(session, report)
            print(f"📊 Recorded as experiment {experiment.experiment_id}")
    return EXIT_OK


def cmd_history(args) -> int:
    from src.database.init_db import init_database
    from src.database.operations import method_history
    from src.database.session import get_session

    init_database()
    with get_session() as session:
        rows = method_history(
            session, args.method,
            n_qubits=args.qubits, n_segments=args.segments, n_gates=args.gates, backend=args.backend,
        )
    if not rows:
        print(f"No stored results for method '{args.method}'")
        return EXIT_OK
    print(f"📊 {args.method}: {len(rows)} experiment(s)")
    for row in rows:
        print(f"  #{row['experiment_id']}: success {row['success_probability']:.3f}, "
              f"avg cost {row['avg_cost_all']:.1f} gates ({row['runs']} runs)")
    return EXIT_OK


def cmd_delete(args) -> int:
    from src.database.init_db import init_database
    from src.database.operations import delete_experiment
    from src.database.session import get_session

    init_database()
    with get_session() as session:
        deleted = delete_experiment(session, args.experiment_id)
    if not deleted:
        print(f"❌ Experiment {args.experiment_id} not found", file=sys.stderr)
        return EXIT_ERROR
    print(f"🗑️  Deleted experiment {args.experiment_id}")
    return EXIT_OK


def cmd_risk(args) -> int:
    value = return_probability(args.alpha, args.beta, args.w, args.path_len, args.x, args.l)
    print(f"{value:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='locate_bugs',
        description='Locate buggy segments in segmented quantum programs',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate a random 2-qubit program with 10 segments and 30 gates
  python -m src.cli.locate_bugs generate --qubits 2 --segments 10 --gates 30 -o circuit.json

  # Inject one bug and build oracles from the bug-free program
  python -m src.cli.locate_bugs inject circuit.json -o buggy.json --injection injection.json
  python -m src.cli.locate_bugs oracles circuit.json -d oracles/

  # Locate the bug and export the measurement trace
  python -m src.cli.locate_bugs locate buggy.json -d oracles/ -o result.json --trace trace.jsonl

  # Compare methods on a seeded corpus
  python -m src.cli.locate_bugs experiment experiment.yaml -o report.json --csv table.csv

Environment:
  LOCATOR_SEED   default seed for every command (--seed overrides)
  LOG_LEVEL      logging level (default INFO)
  DATABASE_URL   experiment records for --record (default sqlite:///data/experiments.db)
        """
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Log per-batch details')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='Generate a random segmented program')
    p.add_argument('--qubits', type=int, default=None, help='Qubit count (default from settings)')
    p.add_argument('--segments', type=int, default=None, help='Segment count (default from settings)')
    p.add_argument('--gates', type=int, default=None, help='Total gate count (default from settings)')
    p.add_argument('--seed', type=int, default=None, help='Seed (default LOCATOR_SEED)')
    p.add_argument('-o', '--output', type=Path, required=True, help='Circuit file to write')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('inject', help='Inject gate-replacement bugs into a program')
    p.add_argument('circuit', type=Path, help='Bug-free circuit file')
    p.add_argument('-o', '--output', type=Path, required=True, help='Buggy circuit file to write')
    p.add_argument('--injection', type=Path, required=True, help='Injection record to write')
    p.add_argument('--bugs', type=int, default=1, help='Number of buggy segments (default 1)')
    p.add_argument('--seed', type=int, default=None, help='Seed (default LOCATOR_SEED)')
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser('oracles', help='Write per-segment oracles from a bug-free program')
    p.add_argument('circuit', type=Path, help='Bug-free circuit file')
    p.add_argument('-d', '--directory', type=Path, required=True, help='Output directory')
    p.add_argument('--limit-bases', type=int, default=None, help='Declare only this many random bases')
    p.add_argument('--seed', type=int, default=None, help='Seed for basis selection')
    p.set_defaults(func=cmd_oracles)

    p = sub.add_parser('tree', help='Print the search tree of a program as JSON')
    p.add_argument('circuit', type=Path, help='Circuit file')
    p.add_argument('--central', action='store_true', help='Naive central-segment tree')
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser('locate', help='Locate the buggy segment of a program')
    p.add_argument('circuit', type=Path, help='Program under test')
    p.add_argument('-d', '--directory', type=Path, required=True, help='Oracle directory')
    p.add_argument('--config', type=Path, default=None, help='Search config (JSON or YAML)')
    p.add_argument('-o', '--output', type=Path, default=None, help='Result JSON to write')
    p.add_argument('--trace', type=Path, default=None, help='Trace JSONL to write')
    p.add_argument('--check-whole', action='store_true', help='Test the whole program first')
    p.add_argument('--seed', type=int, default=None, help='Measurement seed')
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser('experiment', help='Run a comparative experiment')
    p.add_argument('config', type=Path, help='Experiment config (JSON or YAML)')
    p.add_argument('-o', '--output', type=Path, default=None, help='Report JSON to write')
    p.add_argument('--csv', type=Path, default=None, help='Metrics table to write')
    p.add_argument('--record', action='store_true', help='Store the report in DATABASE_URL')
    p.add_argument('--workers', type=int, default=None, help='Worker processes')
    p.add_argument('--seed', type=int, default=None, help='Corpus seed')
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser('history', help='Show stored metrics of one method')
    p.add_argument('method', help='Method variant name (e.g. proposed, proposed-no_early)')
    p.add_argument('--qubits', type=int, default=None, help='Only experiments with this qubit count')
    p.add_argument('--segments', type=int, default=None, help='Only experiments with this segment count')
    p.add_argument('--gates', type=int, default=None, help='Only experiments with this gate count')
    p.add_argument('--backend', choices=['simulator', 'perfect'], default=None, help='Only this backend')
    p.set_defaults(func=cmd_history)

    p = sub.add_parser('delete', help='Delete a stored experiment and its results')
    p.add_argument('experiment_id', type=int, help='Experiment ID')
    p.set_defaults(func=cmd_delete)

    p = sub.add_parser('risk', help='Evaluate the return-probability estimate')
    p.add_argument('--alpha', type=float, required=True, help='False-positive rate')
    p.add_argument('--beta', type=float, required=True, help='False-negative rate')
    p.add_argument('--w', type=int, required=True, help='Same-direction run length')
    p.add_argument('--path-len', type=int, required=True, help='Edges on the current path')
    p.add_argument('--x', type=int, required=True, help='Segment tested by the suspicious node')
    p.add_argument('--l', type=int, required=True, help='Number of segments')
    p.set_defaults(func=cmd_risk)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR

    configure_logging('DEBUG' if args.verbose else None)
    try:
        return args.func(args)
    except USER_ERRORS as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
