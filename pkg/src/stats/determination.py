"""Determination states and the threshold rules that assign them."""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional

from src.utils.config import config


class Determination(str, Enum):
    """Verdict held by a search node.

    Left* means a bug was detected in the executed prefix (search goes left),
    Right* means the prefix looks bug-free (search goes right).
    """
    UNDETERMINED = 'Undetermined'
    LEFT_EARLY = 'LeftEarly'
    RIGHT_EARLY = 'RightEarly'
    LEFT_FINALIZED = 'LeftFinalized'
    RIGHT_FINALIZED = 'RightFinalized'

    @property
    def is_left(self) -> bool:
        return self in (Determination.LEFT_EARLY, Determination.LEFT_FINALIZED)

    @property
    def is_right(self) -> bool:
        return self in (Determination.RIGHT_EARLY, Determination.RIGHT_FINALIZED)

    @property
    def is_finalized(self) -> bool:
        return self in (Determination.LEFT_FINALIZED, Determination.RIGHT_FINALIZED)

    @property
    def direction(self) -> Optional[str]:
        """'L', 'R' or None for Undetermined."""
        if self.is_left:
            return 'L'
        if self.is_right:
            return 'R'
        return None


@dataclass(frozen=True)
class Thresholds:
    """p-value and power thresholds for strict and early determination.

    Attributes:
        sig: Significance level for detecting a bug
        t_power: Minimum power for detecting a bug
        sig_relaxed: Relaxed significance level (early determination)
        t_power_relaxed: Relaxed minimum power (early determination)
        t_upper_p: p-value at or above which a prefix is bug-free
        t_upper_p_relaxed: Relaxed bug-free p-value (early determination)
    """

    sig: float = 0.05
    t_power: float = 0.8
    sig_relaxed: float = 0.1
    t_power_relaxed: float = 0.0
    t_upper_p: float = 0.8
    t_upper_p_relaxed: float = 0.6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Threshold {name} must be in [0, 1], got {value}")
        if self.sig > self.sig_relaxed:
            raise ValueError(f"sig ({self.sig}) must be <= sig_relaxed ({self.sig_relaxed})")
        if self.t_upper_p_relaxed > self.t_upper_p:
            raise ValueError(
                f"t_upper_p_relaxed ({self.t_upper_p_relaxed}) must be <= t_upper_p ({self.t_upper_p})"
            )

    @classmethod
    def from_config(cls, preset: Optional[str] = None, **overrides: Any) -> 'Thresholds':
        """Build thresholds from settings.yaml, an optional preset and overrides.

        Args:
            preset: Name under threshold_presets ('normal', 'relaxed', 'strict')
            **overrides: Explicit field values (None values are ignored)

        Raises:
            ValueError: If the preset is unknown or a value is invalid
        """
        fields = {k: v for k, v in config.search_defaults.items() if k in cls.__dataclass_fields__}
        if preset is not None:
            if not config.is_valid_threshold_preset(preset):
                raise ValueError(
                    f"Unknown threshold preset '{preset}'. "
                    f"Must be one of: {', '.join(config.threshold_presets)}"
                )
            fields.update(config.threshold_presets[preset])
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**{k: float(v) for k, v in fields.items()})

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def classify(outcome, th: Thresholds, early: bool = True) -> Determination:
    """Map a test outcome to a determination.

    An inadequate sample (every expected count below the continuity
    threshold) is always Undetermined. Otherwise rules are checked in
    order; the first match wins:
    1. p <= sig and power >= t_power -> LeftFinalized
    2. p >= t_upper_p -> RightFinalized
    3. p <= sig_relaxed and power >= t_power_relaxed -> LeftEarly
    4. p >= t_upper_p_relaxed -> RightEarly
    5. otherwise Undetermined

    Args:
        outcome: ChiSquareOutcome
        th: Thresholds to apply
        early: If False, rules 3 and 4 are skipped (strict-only searches)

    Example:
        >>> classify(outcome_with(p=0.07, power=0.2), Thresholds())
        <Determination.LEFT_EARLY: 'LeftEarly'>
    """
    if not outcome.adequate:
        return Determination.UNDETERMINED

    p = outcome.p_value
    power = outcome.power

    if p <= th.sig and power >= th.t_power:
        return Determination.LEFT_FINALIZED
    if p >= th.t_upper_p:
        return Determination.RIGHT_FINALIZED
    if early:
        if p <= th.sig_relaxed and power >= th.t_power_relaxed:
            return Determination.LEFT_EARLY
        if p >= th.t_upper_p_relaxed:
            return Determination.RIGHT_EARLY
    return Determination.UNDETERMINED
