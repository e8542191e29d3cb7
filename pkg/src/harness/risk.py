"""Probability that the search should return to an earlier node.

After w consecutive Left edges that follow a Right edge at depth i, the
chance that the Right edge was wrong is approximately

    P = (alpha / (1 - beta))^w * (l - x)

where alpha is the false-positive rate, 1 - beta the detection power and
x the segment tested by the suspicious node. The (1 - alpha) factors of
the full ratio cancel.
"""


def return_probability(alpha: float, beta: float, w: int, path_len: int, x: int, l: int) -> float:
    """Estimate of the return probability, clamped to [0, 1].

    Args:
        alpha: False-positive rate, 0 < alpha < 1
        beta: False-negative rate, 0 < beta < 1
        w: Same-direction run length, 1 <= w <= path_len
        path_len: Edges on the current path
        x: Segment tested by the suspicious node, 1 <= x < l
        l: Number of segments

    Raises:
        ValueError: On any domain violation

    Example:
        >>> return_probability(0.05, 0.2, 1, 3, 5, 10)
        0.3125
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    if not 1 <= w <= path_len:
        raise ValueError(f"w must be in 1..path_len ({path_len}), got {w}")
    if not 1 <= x < l:
        raise ValueError(f"x must be in 1..{l - 1}, got {x}")

    estimate = (alpha / (1.0 - beta)) ** w * (l - x)
    return min(1.0, max(0.0, estimate))
