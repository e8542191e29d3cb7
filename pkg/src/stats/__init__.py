"""Chi-square goodness-of-fit testing and determination rules."""

from src.stats.chi_square import (
    CategoricalOracle,
    StatTestError,
    ChiSquareOutcome,
    chi_square_test,
    load_oracle,
    load_oracles,
    save_oracle,
    save_oracles,
)
from src.stats.determination import Determination, Thresholds, classify

__all__ = [
    'CategoricalOracle', 'StatTestError', 'ChiSquareOutcome', 'chi_square_test',
    'load_oracle', 'load_oracles', 'save_oracle', 'save_oracles', 'Determination', 'Thresholds', 'classify',
]
