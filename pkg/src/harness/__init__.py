"""Program generation, baselines, experiments and diagnostics."""

from src.harness.baselines import linear_locate, naive_binary_locate, proposed_locate
from src.harness.experiment import (
    CorpusStarvationError,
    ExperimentReport,
    ExperimentSettings,
    run_experiment,
)
from src.harness.generator import (
    BugInjection,
    GenSpec,
    build_oracles,
    detectability_filter,
    generate_program,
    inject_bug,
    inject_bugs,
)
from src.harness.multibug import MultiBugResult, iterative_multibug_locate
from src.harness.risk import return_probability

__all__ = [
    'linear_locate', 'naive_binary_locate', 'proposed_locate', 'CorpusStarvationError',
    'ExperimentReport', 'ExperimentSettings', 'run_experiment', 'BugInjection', 'GenSpec',
    'build_oracles', 'detectability_filter', 'generate_program', 'inject_bug', 'inject_bugs',
    'MultiBugResult', 'iterative_multibug_locate', 'return_probability',
]
