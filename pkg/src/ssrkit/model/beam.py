"""Generic beam search over fixed-length label sequences."""

from __future__ import annotations


def beam_search(step_fn, num_steps: int, num_labels: int, beam_width: int) -> list[int]:
    """Highest-scoring label sequence under summed log-probabilities.

    ``step_fn(prefix)`` returns ``num_labels`` log-probabilities for the next
    step given the tuple of labels decoded so far.  ``beam_width=1`` is greedy
    decoding; ``beam_width >= num_labels ** num_steps`` is exhaustive search.
    Ties break deterministically toward the lexicographically smaller prefix.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    beams: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    for _ in range(num_steps):
        expanded = []
        for score, prefix in beams:
            logp = step_fn(prefix)
            for label in range(num_labels):
                expanded.append((score + float(logp[label]), prefix + (label,)))
        expanded.sort(key=lambda item: (-item[0], item[1]))
        beams = expanded[:beam_width]
    return list(beams[0][1])
