"""Chi-square goodness-of-fit testing of measured counts against an oracle.

The oracle is the expected categorical distribution of Z-basis outcomes.
A restricted oracle declares only a subset of bases: counts on undeclared
bases are discarded and the declared probabilities are renormalized.

Oracle file format:
    {"restricted": false, "probs": {"00": 0.5, "11": 0.5}}
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
from scipy.stats import chi2, ncx2

from src.circuit.simulator import CountsMap

# A compared category with fewer observed or expected counts than this
# switches on the continuity correction.
YATES_MIN_COUNT = 5


class StatTestError(Exception):
    """Raised for unusable samples or malformed oracles."""
    pass


@dataclass(frozen=True)
class CategoricalOracle:
    """Expected outcome probabilities per basis.

    Attributes:
        probs: Bitstring -> probability (all > 0)
        restricted: True when only a subset of bases is declared
    """

    probs: Mapping[str, float]
    restricted: bool = False

    def __post_init__(self):
        probs = {str(k): float(v) for k, v in self.probs.items()}
        if not probs:
            raise StatTestError("Oracle must declare at least one basis")
        lengths = {len(k) for k in probs}
        if len(lengths) != 1 or any(set(k) - {'0', '1'} for k in probs):
            raise StatTestError("Oracle keys must be bitstrings of one common length")
        if any(v <= 0 for v in probs.values()):
            raise StatTestError("Oracle probabilities must be > 0")

        total = sum(probs.values())
        if not self.restricted and abs(total - 1.0) > 1e-9:
            raise StatTestError(f"Unrestricted oracle probabilities sum to {total}, expected 1")
        if self.restricted and total > 1.0 + 1e-9:
            raise StatTestError(f"Restricted oracle probabilities sum to {total} > 1")

        object.__setattr__(self, 'probs', dict(sorted(probs.items())))

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.probs)))

    def to_dict(self) -> Dict[str, Any]:
        return {'restricted': self.restricted, 'probs': dict(self.probs)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'CategoricalOracle':
        if 'probs' not in data:
            raise StatTestError("Oracle is missing 'probs'")
        return cls(dict(data['probs']), bool(data.get('restricted', False)))

    @classmethod
    def from_probabilities(cls, probs: Mapping[str, float], restricted: bool = False) -> 'CategoricalOracle':
        """Build an oracle from simulated probabilities.

        Unrestricted oracles are renormalized to absorb float drift left by
        dropping near-zero bases.
        """
        if restricted:
            return cls(dict(probs), True)
        total = sum(probs.values())
        return cls({k: v / total for k, v in probs.items()}, False)


@dataclass(frozen=True)
class ChiSquareOutcome:
    """Result of one chi-square goodness-of-fit test.

    Attributes:
        chi2: Test statistic (inf when an impossible basis was observed)
        df: Degrees of freedom (compared categories - 1, floored at 1)
        p_value: Upper-tail probability of chi2
        power: Post-hoc power at the significance level
        yates_applied: Whether the continuity correction was used
        effective_shots: Shots retained for the comparison
        discarded_shots: Shots on undeclared bases of a restricted oracle
        adequate: False when every compared expected count is below
            YATES_MIN_COUNT; such a sample cannot support a determination
    """

    chi2: float
    df: int
    p_value: float
    power: float
    yates_applied: bool
    effective_shots: int
    discarded_shots: int = 0
    adequate: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'chi2': self.chi2,
            'df': self.df,
            'p_value': self.p_value,
            'power': self.power,
            'yates_applied': self.yates_applied,
            'effective_shots': self.effective_shots,
            'discarded_shots': self.discarded_shots,
            'adequate': self.adequate,
        }


def chi_square_power(noncentrality: float, df: int, sig: float) -> float:
    """Probability that a noncentral chi-square exceeds the sig-critical value.

    Args:
        noncentrality: lambda >= 0
        df: Degrees of freedom
        sig: Significance level

    Returns:
        Power in [0, 1]; equals sig when lambda is 0
    """
    critical = chi2.isf(sig, df)
    if noncentrality <= 0:
        return float(sig)
    return float(min(1.0, max(0.0, ncx2.sf(critical, df, noncentrality))))


def chi_square_test(observed: CountsMap, oracle: CategoricalOracle, sig: float = 0.05) -> ChiSquareOutcome:
    """Test observed counts against an oracle.

    Args:
        observed: Accumulated counts (total_shots >= 1)
        oracle: Expected distribution
        sig: Significance level used for the power critical value

    Returns:
        ChiSquareOutcome with chi2, df, p-value and power

    Raises:
        StatTestError: If no shots remain after restriction

    Example:
        >>> outcome = chi_square_test(CountsMap(1, {'0': 60, '1': 40}),
        ...                           CategoricalOracle({'0': 0.5, '1': 0.5}))
        >>> outcome.chi2, round(outcome.p_value, 4)
        (4.0, 0.0455)
    """
    if observed.total_shots < 1:
        raise StatTestError("Observed counts are empty")
    if observed.n_qubits != oracle.n_qubits:
        raise StatTestError(
            f"Counts over {observed.n_qubits} qubit(s) cannot be tested against a "
            f"{oracle.n_qubits}-qubit oracle"
        )

    if oracle.restricted:
        categories = list(oracle.probs)
        retained = [observed.get(b) for b in categories]
        effective = sum(retained)
        discarded = observed.total_shots - effective
        if effective == 0:
            raise StatTestError("No observed shots fall on the declared oracle bases")
        declared_total = sum(oracle.probs.values())
        expected_probs = np.array([oracle.probs[b] / declared_total for b in categories])
    else:
        undeclared = [b for b in observed.keys() if b not in oracle.probs]
        effective = observed.total_shots
        discarded = 0
        if undeclared:
            # An outcome the oracle says is impossible is definitive evidence of a bug.
            categories = len(oracle.probs) + len(undeclared)
            return ChiSquareOutcome(
                chi2=math.inf,
                df=max(1, categories - 1),
                p_value=0.0,
                power=1.0,
                yates_applied=False,
                effective_shots=effective,
            )
        categories = list(oracle.probs)
        retained = [observed.get(b) for b in categories]
        expected_probs = np.array([oracle.probs[b] for b in categories])

    obs = np.array(retained, dtype=float)
    expected = expected_probs * effective
    df = max(1, len(categories) - 1)

    yates = bool(np.any(obs < YATES_MIN_COUNT) or np.any(expected < YATES_MIN_COUNT))
    deviation = np.abs(obs - expected)
    if yates:
        deviation = np.maximum(deviation - 0.5, 0.0)
    statistic = float(np.sum(deviation ** 2 / expected))

    p_value = float(chi2.sf(statistic, df)) if statistic > 0 else 1.0

    proportions = obs / effective
    noncentrality = float(effective * np.sum((proportions - expected_probs) ** 2 / expected_probs))
    power = chi_square_power(noncentrality, df, sig)

    return ChiSquareOutcome(
        chi2=statistic,
        df=df,
        p_value=min(1.0, max(0.0, p_value)),
        power=power,
        yates_applied=yates,
        effective_shots=effective,
        discarded_shots=discarded,
        adequate=bool(np.any(expected >= YATES_MIN_COUNT)),
    )


def save_oracle(oracle: CategoricalOracle, path: Path) -> None:
    """Write an oracle file."""
    Path(path).write_text(json.dumps(oracle.to_dict(), sort_keys=True, indent=2) + "\n", encoding='utf-8')


def load_oracle(path: Path) -> CategoricalOracle:
    """Read an oracle file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        StatTestError: If the content is not a valid oracle
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Oracle file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise StatTestError(f"{path}: invalid JSON - {e}")
    return CategoricalOracle.from_dict(data)


ORACLE_FILE_PATTERN = "segment_{k}.json"


def save_oracles(oracles: Mapping[int, CategoricalOracle], directory: Path) -> None:
    """Write one segment_<k>.json file per tested segment."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, oracle in sorted(oracles.items()):
        save_oracle(oracle, directory / ORACLE_FILE_PATTERN.format(k=k))


def load_oracles(directory: Path) -> Dict[int, CategoricalOracle]:
    """Read every segment_<k>.json file in a directory.

    Raises:
        FileNotFoundError: If the directory doesn't exist
        StatTestError: If a file is not a valid oracle
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Oracle directory not found: {directory}")
    oracles = {}
    for path in sorted(directory.glob("segment_*.json")):
        suffix = path.stem.split("_", 1)[1]
        if suffix.isdigit():
            oracles[int(suffix)] = load_oracle(path)
    return oracles
