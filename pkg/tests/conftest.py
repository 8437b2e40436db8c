"""Shared corpus-building helpers for the test suite."""

import random

import pytest

from ssrkit.events import (
    ArgumentRole,
    Corpus,
    Event,
    EventSequence,
    RELATION_TARGETS,
    RelationInstance,
    get_label_space,
)

VIDSITU = get_label_space("vidsitu")


def make_event(verb="walk", args=None):
    if args is None:
        args = [("Arg0", "the dog")]
    return Event(verb, tuple((ArgumentRole(r), e) for r, e in args)).normalized()


def make_sequence(seq_id, verbs, labels_by_target, arg_entities=None):
    """Five single-arg events plus relations from a {target: label} dict."""
    events = []
    for i, verb in enumerate(verbs):
        entity = (arg_entities or {}).get(i + 1, f"the thing{i}")
        events.append(make_event(verb, [("Arg0", entity)]))
    relations = tuple(
        RelationInstance(seq_id, t, lbl) for t, lbl in sorted(labels_by_target.items())
    )
    return EventSequence(seq_id, tuple(events), relations)


def random_corpus(num_sequences=20, seed=0, space=VIDSITU, verbs=None):
    """Uniformly random labels; every sequence fully annotated."""
    rng = random.Random(seed)
    verbs = verbs or [f"verb{i}" for i in range(8)]
    sequences = []
    for k in range(num_sequences):
        chosen = [rng.choice(verbs) for _ in range(5)]
        labels = {t: rng.choice(space.labels) for t in RELATION_TARGETS}
        sequences.append(make_sequence(f"seq-{seed}-{k:04d}", chosen, labels))
    return Corpus(space, sequences)


@pytest.fixture
def small_corpus():
    return random_corpus(num_sequences=10, seed=1)
