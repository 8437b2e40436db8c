"""Core domain objects: events, argument roles, relation labels, sequences.

Everything here is immutable after construction.  Invariant checks live in
``validate_sequence`` which reports violations as data instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import MalformedRoleError

_BASE_ROLE_RE = re.compile(r"^Arg\d+$")

CENTER_INDEX = 3
RELATION_TARGETS = (1, 2, 4, 5)


def classify_role(code: str) -> str:
    """Classify a role code as ``"base"`` or ``"auxiliary"``.

    Base roles are exactly ``Arg`` followed by one or more digits; every
    other non-empty ASCII code without whitespace is auxiliary.
    """
    if not code:
        raise MalformedRoleError("empty role code")
    if not code.isascii() or any(ch.isspace() for ch in code):
        raise MalformedRoleError(f"role code must be ASCII without whitespace: {code!r}")
    return "base" if _BASE_ROLE_RE.match(code) else "auxiliary"


@dataclass(frozen=True, order=True)
class ArgumentRole:
    code: str

    def __post_init__(self):
        classify_role(self.code)  # raises on malformed codes

    @property
    def is_base(self) -> bool:
        return classify_role(self.code) == "base"

    @property
    def is_auxiliary(self) -> bool:
        return not self.is_base

    def sort_key(self):
        """Canonical order: base roles by numeric suffix, then auxiliary lexicographically."""
        if self.is_base:
            return (0, int(self.code[3:]), self.code)
        return (1, 0, self.code)


@dataclass(frozen=True)
class Event:
    """One SSR unit: a verb plus ordered (role, entity) pairs."""

    verb: str
    args: tuple[tuple[ArgumentRole, str], ...] = ()

    def normalized(self) -> "Event":
        """Return the event with args in canonical order (base first, stated sorts)."""
        return Event(self.verb, tuple(sorted(self.args, key=lambda a: a[0].sort_key())))

    def base_args(self) -> tuple[tuple[ArgumentRole, str], ...]:
        return tuple(a for a in self.args if a[0].is_base)

    def aux_args(self) -> tuple[tuple[ArgumentRole, str], ...]:
        return tuple(a for a in self.args if a[0].is_auxiliary)


@dataclass(frozen=True)
class LabelSpace:
    name: str
    labels: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __contains__(self, label: str) -> bool:
        return label in self.labels


VIDSITU_SPACE = LabelSpace("vidsitu", ("Causes", "Enables", "ReactionTo", "NoRelation"))
KB_PRETRAIN_SPACE = LabelSpace("kb-pretrain", ("Before", "Intent", "After"))

_SPACES = {s.name: s for s in (VIDSITU_SPACE, KB_PRETRAIN_SPACE)}


def get_label_space(name: str) -> LabelSpace:
    try:
        return _SPACES[name]
    except KeyError:
        raise KeyError(f"unknown label space {name!r}; known: {sorted(_SPACES)}") from None


@dataclass(frozen=True)
class RelationInstance:
    """Annotated relation between the center event (index 3) and one other event."""

    sequence_id: str
    target_index: int
    label: str

    @property
    def distance(self) -> int:
        return self.target_index - CENTER_INDEX


@dataclass(frozen=True)
class EventSequence:
    id: str
    events: tuple[Event, ...]
    relations: tuple[RelationInstance, ...] = ()

    def relation_for(self, target_index: int) -> RelationInstance | None:
        for r in self.relations:
            if r.target_index == target_index:
                return r
        return None

    def event(self, index: int) -> Event:
        """1-based event access matching the annotation convention."""
        return self.events[index - 1]


@dataclass
class Corpus:
    label_space: LabelSpace
    sequences: list[EventSequence]
    meta: dict = field(default_factory=dict)

    def relation_instances(self):
        for seq in self.sequences:
            yield from seq.relations

    def num_relations(self) -> int:
        return sum(len(s.relations) for s in self.sequences)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


# Violation codes
SEQ_LEN = "SEQ_LEN"
SELF_RELATION = "SELF_RELATION"
BAD_TARGET = "BAD_TARGET"
DUP_TARGET = "DUP_TARGET"
BAD_LABEL = "BAD_LABEL"
ID_MISMATCH = "ID_MISMATCH"
EMPTY_VERB = "EMPTY_VERB"
VERB_NOT_LOWER = "VERB_NOT_LOWER"
EMPTY_ENTITY = "EMPTY_ENTITY"
DUP_ROLE = "DUP_ROLE"
ARG_ORDER = "ARG_ORDER"


def _validate_event(ev: Event, where: str) -> list[Violation]:
    out = []
    if not ev.verb:
        out.append(Violation(EMPTY_VERB, f"{where}: empty verb"))
    elif ev.verb != ev.verb.lower():
        out.append(Violation(VERB_NOT_LOWER, f"{where}: verb {ev.verb!r} is not lowercase"))
    seen = set()
    for role, entity in ev.args:
        if role.code in seen:
            out.append(Violation(DUP_ROLE, f"{where}: duplicate role {role.code}"))
        seen.add(role.code)
        if not entity:
            out.append(Violation(EMPTY_ENTITY, f"{where}: empty entity for role {role.code}"))
    keys = [a[0].sort_key() for a in ev.args]
    if keys != sorted(keys):
        out.append(Violation(ARG_ORDER, f"{where}: args not in canonical order"))
    return out


def validate_sequence(seq: EventSequence, space: LabelSpace) -> list[Violation]:
    """Check every structural invariant; an empty list means the sequence is well formed."""
    out: list[Violation] = []
    if len(seq.events) != 5:
        out.append(Violation(SEQ_LEN, f"sequence {seq.id}: {len(seq.events)} events, expected 5"))
    for i, ev in enumerate(seq.events, start=1):
        out.extend(_validate_event(ev, f"sequence {seq.id} event {i}"))
    seen_targets = set()
    for rel in seq.relations:
        if rel.sequence_id != seq.id:
            out.append(Violation(ID_MISMATCH, f"relation carries id {rel.sequence_id!r}, sequence is {seq.id!r}"))
        if rel.target_index == CENTER_INDEX:
            out.append(Violation(SELF_RELATION, f"sequence {seq.id}: relation targets the center event"))
        elif rel.target_index not in RELATION_TARGETS:
            out.append(Violation(BAD_TARGET, f"sequence {seq.id}: target index {rel.target_index}"))
        if rel.target_index in seen_targets:
            out.append(Violation(DUP_TARGET, f"sequence {seq.id}: duplicate target {rel.target_index}"))
        seen_targets.add(rel.target_index)
        if rel.label not in space:
            out.append(Violation(BAD_LABEL, f"sequence {seq.id}: label {rel.label!r} not in space {space.name!r}"))
    return out
