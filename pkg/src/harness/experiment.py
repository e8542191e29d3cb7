"""Comparative experiments over a seeded corpus of buggy programs.

A corpus is a list of (reference, buggy) pairs drawn from one GenSpec.
Every requested method (and every ablation of the proposed method) runs on
every pair. All methods of one run share the same measurement stream, so
differences between methods are not diluted by sampling noise.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from src.circuit.program import SegmentedProgram, dumps_canonical
from src.harness.baselines import linear_locate, naive_binary_locate, proposed_locate
from src.harness.generator import (
    STREAM_BUG,
    STREAM_MEASURE,
    STREAM_ORACLE,
    STREAM_PROGRAM,
    BugInjection,
    GenSpec,
    build_oracles,
    derive_rng,
    generate_program,
    inject_bugs,
    output_difference,
)
from src.harness.multibug import iterative_multibug_locate
from src.search.backends import MeasurementBackend, PerfectEvidenceBackend, SimulatorBackend
from src.search.locator import SearchConfig
from src.search.tree import CENTRAL, COST_BASED
from src.utils.config import config
from src.utils.validation import METHOD_NAMES, validate_experiment_config

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['method', 'qubits', 'segments', 'gates', 'success_prob', 'avg_cost_success', 'avg_cost_all']


class CorpusStarvationError(Exception):
    """Raised when the detectability filter rejects too many generated programs."""
    pass


@dataclass(frozen=True)
class ExperimentSettings:
    """Everything that determines an experiment.

    Attributes:
        gen: Program shape and corpus seed
        corpus_size: Number of kept program/bug pairs
        search: Search configuration for the proposed method and baselines
        methods: Subset of 'proposed', 'binary', 'linear'
        ablations: Proposed-method variants with one approach disabled
        filter: Exclude pairs whose output difference is <= filter_threshold
        filter_threshold: Detectability threshold
        limited_bases: Declare only this many bases per oracle (None = all)
        n_bugs: Bugs per program; >= 2 runs the iterative multi-bug procedure
        backend: 'simulator' or 'perfect'
        workers: Processes for corpus execution
        threshold_preset: Echo of the preset used to build `search`
        measurement_preset: Echo of the preset used to build `search`
    """

    gen: GenSpec
    corpus_size: int = 100
    search: SearchConfig = field(default_factory=SearchConfig)
    methods: Tuple[str, ...] = METHOD_NAMES
    ablations: Tuple[str, ...] = ()
    filter: bool = True
    filter_threshold: float = 0.05
    limited_bases: Optional[int] = None
    n_bugs: int = 1
    backend: str = 'simulator'
    workers: int = 1
    max_attempts_factor: int = 50
    threshold_preset: Optional[str] = None
    measurement_preset: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], seed: Optional[int] = None) -> 'ExperimentSettings':
        """Build settings from a parsed config file.

        Args:
            data: Config mapping (see validate_experiment_config)
            seed: Overrides data['seed'] and LOCATOR_SEED

        Raises:
            ValidationError: If the config is invalid
        """
        validate_experiment_config(data, raise_exception=True)
        defaults = config.experiment_settings
        resolved_seed = config.resolve_seed(seed if seed is not None else data.get('seed'))

        gen = GenSpec.from_config(seed=resolved_seed, **data.get('generation', {}))
        search = SearchConfig.from_config(
            data.get('threshold_preset'),
            data.get('measurement_preset'),
            **data.get('search', {})
        )
        return cls(
            gen=gen,
            corpus_size=int(data.get('corpus_size', defaults.get('corpus_size', 100))),
            search=search,
            methods=tuple(data.get('methods', METHOD_NAMES)),
            ablations=tuple(data.get('ablations', ())),
            filter=bool(data.get('filter', True)),
            filter_threshold=float(data.get('filter_threshold', defaults.get('filter_threshold', 0.05))),
            limited_bases=data.get('limited_bases'),
            n_bugs=int(data.get('n_bugs', 1)),
            backend=data.get('backend', 'simulator'),
            workers=int(data.get('workers', defaults.get('workers', 1))),
            max_attempts_factor=int(defaults.get('max_attempts_factor', 50)),
            threshold_preset=data.get('threshold_preset'),
            measurement_preset=data.get('measurement_preset'),
        )

    def variants(self) -> List[Tuple[str, str, Optional[str]]]:
        """(report name, base method, ablation) for every method to run."""
        names = [(m, m, None) for m in self.methods]
        names += [(f"proposed-{a}", 'proposed', a) for a in self.ablations]
        return names

    def to_dict(self) -> Dict[str, Any]:
        return {
            'generation': self.gen.to_dict(),
            'corpus_size': self.corpus_size,
            'search': self.search.to_dict(),
            'methods': list(self.methods),
            'ablations': list(self.ablations),
            'filter': self.filter,
            'filter_threshold': self.filter_threshold,
            'limited_bases': self.limited_bases,
            'n_bugs': self.n_bugs,
            'backend': self.backend,
            'threshold_preset': self.threshold_preset,
            'measurement_preset': self.measurement_preset,
        }


@dataclass(frozen=True)
class CorpusCase:
    """One kept program/bug pair."""

    index: int
    attempt: int
    reference: SegmentedProgram
    buggy: SegmentedProgram
    injections: Tuple[BugInjection, ...]
    difference: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'run': self.index,
            'attempt': self.attempt,
            'injected': [i.segment for i in self.injections],
            'output_difference': round(self.difference, 12),
        }


@dataclass(frozen=True)
class RunRecord:
    """One method applied to one corpus case."""

    run_index: int
    method: str
    success: bool
    cost: int
    shots: int
    located: Tuple[int, ...]


def build_corpus(settings: ExperimentSettings) -> Tuple[List[CorpusCase], int]:
    """Draw program/bug pairs until corpus_size pass the filter.

    Attempt a uses the (seed, program, a) and (seed, bug, a) streams, so the
    corpus depends only on the GenSpec, the filter and n_bugs.

    Returns:
        (cases, attempts used)

    Raises:
        CorpusStarvationError: After corpus_size * max_attempts_factor attempts
    """
    gen = settings.gen
    max_attempts = settings.corpus_size * settings.max_attempts_factor
    cases: List[CorpusCase] = []
    attempt = 0
    while len(cases) < settings.corpus_size:
        if attempt >= max_attempts:
            raise CorpusStarvationError(
                f"Only {len(cases)} of {settings.corpus_size} programs passed the filter "
                f"after {attempt} attempts"
            )
        reference = generate_program(gen, derive_rng(gen.seed, STREAM_PROGRAM, attempt))
        buggy, injections = inject_bugs(reference, derive_rng(gen.seed, STREAM_BUG, attempt), settings.n_bugs)
        difference = output_difference(reference, buggy)
        if not settings.filter or difference > settings.filter_threshold:
            cases.append(CorpusCase(len(cases), attempt, reference, buggy, tuple(injections), difference))
        attempt += 1

    rejected = attempt - len(cases)
    if rejected > attempt / 2:
        logger.warning("Filter rejected %d of %d generated programs", rejected, attempt)
    logger.info("Corpus ready: %d programs from %d attempts", len(cases), attempt)
    return cases, attempt


def _make_backend(settings: ExperimentSettings, program: SegmentedProgram, run_index: int, round_index: int) -> MeasurementBackend:
    if settings.backend == 'perfect':
        return PerfectEvidenceBackend(program)
    return SimulatorBackend(program, derive_rng(settings.gen.seed, STREAM_MEASURE, run_index, round_index))


def _locate_with(method: str, ablation: Optional[str]):
    if method == 'linear':
        return linear_locate
    if method == 'binary':
        return naive_binary_locate
    strategy = CENTRAL if ablation == 'no_cost_tree' else COST_BASED

    def run(program, backend, oracles, cfg):
        return proposed_locate(program, backend, oracles, cfg, strategy)
    return run


def run_case(settings: ExperimentSettings, case: CorpusCase) -> List[RunRecord]:
    """Run every method variant on one corpus case."""
    oracle_rng = derive_rng(settings.gen.seed, STREAM_ORACLE, case.index)
    if settings.limited_bases is None:
        oracles = build_oracles(case.reference)
    else:
        oracles = build_oracles(case.reference, settings.limited_bases, oracle_rng)

    records = []
    for name, method, ablation in settings.variants():
        cfg = settings.search
        if ablation is not None and ablation != 'no_cost_tree':
            cfg = cfg.with_ablation(ablation)
        locate_fn = _locate_with(method, ablation)

        if settings.n_bugs == 1:
            backend = _make_backend(settings, case.buggy, case.index, 0)
            result = locate_fn(case.buggy, backend, oracles, cfg)
            located = (result.segment,) if result.located else ()
            success = result.located and result.segment == case.injections[0].segment
            records.append(RunRecord(case.index, name, success, result.total_gate_cost, result.total_shots, located))
        else:
            multi = iterative_multibug_locate(
                case.reference, case.buggy, list(case.injections), oracles, cfg, locate_fn,
                lambda program, round_index: _make_backend(settings, program, case.index, round_index),
            )
            records.append(RunRecord(
                case.index, name, multi.success, multi.total_gate_cost, multi.total_shots, tuple(multi.located)
            ))
    return records


def _run_case_job(job: Tuple[ExperimentSettings, CorpusCase]) -> List[RunRecord]:
    return run_case(*job)


class ExperimentReport:
    """Per-method metrics of an experiment.

    Attributes:
        settings: Experiment settings (echoed into the report)
        cases: Corpus cases in run order
        attempts: Programs generated to fill the corpus
        records: One RunRecord per (case, method), sorted by run index
    """

    def __init__(self, settings: ExperimentSettings, cases: List[CorpusCase], attempts: int, records: List[RunRecord]):
        self.settings = settings
        self.cases = cases
        self.attempts = attempts
        order = {name: i for i, (name, _, _) in enumerate(settings.variants())}
        self.records = sorted(records, key=lambda r: (r.run_index, order[r.method]))

    def frame(self) -> pd.DataFrame:
        """One row per (run, method)."""
        return pd.DataFrame(
            [
                {'run': r.run_index, 'method': r.method, 'success': r.success, 'cost': r.cost, 'shots': r.shots}
                for r in self.records
            ],
            columns=['run', 'method', 'success', 'cost', 'shots'],
        )

    def summary(self) -> pd.DataFrame:
        """Metrics per method, in the order methods were requested.

        Columns: runs, successes, failures, success_probability,
        avg_cost_success (NaN without successes), avg_cost_all.
        """
        df = self.frame()
        rows = []
        for name, _, _ in self.settings.variants():
            runs = df[df['method'] == name]
            successes = runs[runs['success']]
            rows.append({
                'method': name,
                'runs': len(runs),
                'successes': len(successes),
                'failures': len(runs) - len(successes),
                'success_probability': len(successes) / len(runs) if len(runs) else float('nan'),
                'avg_cost_success': float(successes['cost'].mean()) if len(successes) else float('nan'),
                'avg_cost_all': float(runs['cost'].mean()) if len(runs) else float('nan'),
            })
        return pd.DataFrame(rows).set_index('method')

    def metrics(self, method: str) -> Dict[str, Any]:
        return _row_metrics(self.summary().loc[method])

    def to_dict(self) -> Dict[str, Any]:
        summary = self.summary()
        return {
            'config': self.settings.to_dict(),
            'corpus': {
                'size': len(self.cases),
                'attempts': self.attempts,
                'cases': [c.to_dict() for c in self.cases],
            },
            'methods': {name: _row_metrics(summary.loc[name]) for name in summary.index},
        }

    def to_json(self) -> str:
        return dumps_canonical(self.to_dict())

    def table(self) -> pd.DataFrame:
        """The CSV table: method, qubits, segments, gates, success_prob, avg_cost_success, avg_cost_all."""
        summary = self.summary()
        gen = self.settings.gen
        table = pd.DataFrame({
            'method': summary.index,
            'qubits': gen.n_qubits,
            'segments': gen.n_segments,
            'gates': gen.n_gates,
            'success_prob': summary['success_probability'].values,
            'avg_cost_success': summary['avg_cost_success'].values,
            'avg_cost_all': summary['avg_cost_all'].values,
        })
        return table[CSV_COLUMNS]

    def write_csv(self, path: Path) -> None:
        self.table().to_csv(path, index=False, float_format='%.6f', lineterminator='\n')

    def format_summary(self) -> str:
        """Human-readable summary for the console."""
        gen = self.settings.gen
        lines = [
            f"\n{'=' * 70}",
            f"Experiment: {gen.n_qubits} qubits, {gen.n_segments} segments, {gen.n_gates} gates",
            f"Corpus: {len(self.cases)} programs ({self.attempts} generated), seed {gen.seed}",
            f"{'=' * 70}",
            f"{'method':<28}{'success':>10}{'cost(success)':>16}{'cost(all)':>16}",
        ]
        for name, row in self.summary().iterrows():
            lines.append(
                f"{name:<28}{row['success_probability']:>10.3f}"
                f"{row['avg_cost_success']:>16.1f}{row['avg_cost_all']:>16.1f}"
            )
        lines.append(f"{'=' * 70}\n")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"<ExperimentReport(runs={len(self.cases)}, methods={[v[0] for v in self.settings.variants()]})>"


def _clean(value: float) -> Optional[float]:
    value = float(value)
    return None if math.isnan(value) else round(value, 6)


def _row_metrics(row: pd.Series) -> Dict[str, Any]:
    return {
        'runs': int(row['runs']),
        'failures': int(row['failures']),
        'success_probability': _clean(row['success_probability']),
        'avg_cost_success': _clean(row['avg_cost_success']),
        'avg_cost_all': _clean(row['avg_cost_all']),
    }


def run_experiment(settings: ExperimentSettings) -> ExperimentReport:
    """Build the corpus, run every method on it and aggregate the metrics.

    Args:
        settings: Experiment settings

    Returns:
        ExperimentReport; identical settings give a byte-identical report

    Raises:
        CorpusStarvationError: If the filter rejects too many programs

    Example:
        >>> settings = ExperimentSettings(GenSpec(2, 10, 30, seed=1), corpus_size=20)
        >>> print(run_experiment(settings).format_summary())
    """
    cases, attempts = build_corpus(settings)
    jobs = [(settings, case) for case in cases]

    records: List[RunRecord] = []
    if settings.workers > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            for case_records in pool.map(_run_case_job, jobs):
                records.extend(case_records)
    else:
        for done, job in enumerate(jobs, start=1):
            records.extend(_run_case_job(job))
            if done % 10 == 0 or done == len(jobs):
                logger.info("Completed %d/%d runs", done, len(jobs))

    return ExperimentReport(settings, cases, attempts, records)
