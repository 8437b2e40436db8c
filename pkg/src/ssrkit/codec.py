"""Token codec: event serialization, parsing, vocabulary, id encoding.

Tokenization is lowercase + whitespace split.  Structural tokens are reserved:
<EVT> opens an event, <ROLE:code> opens an argument, <*> marks a target event
in full-sequence mode.  All functions here are pure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import CapacityError, TokenParseError
from .events import ArgumentRole, Corpus, Event, EventSequence, RELATION_TARGETS

PAD = "<PAD>"
UNK = "<UNK>"
EVT = "<EVT>"
MARKER = "<*>"
MARKER_SECOND = "<**>"  # optional two-marker rendering, off by default

MODE_PAIR = "pair"
MODE_FULL = "full"


def role_token(code: str) -> str:
    return f"<ROLE:{code}>"


def is_role_token(tok: str) -> bool:
    return tok.startswith("<ROLE:") and tok.endswith(">")


def role_from_token(tok: str) -> str:
    return tok[len("<ROLE:"):-1]


def is_structural(tok: str) -> bool:
    return tok in (PAD, UNK, EVT, MARKER, MARKER_SECOND) or is_role_token(tok)


def entity_tokens(entity: str) -> list[str]:
    return entity.lower().split()


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    marker_positions: tuple[int, ...]
    mode: str
    target_index: int

    def __len__(self) -> int:
        return len(self.tokens)


def serialize_event(e: Event, include_aux: bool = True) -> list[str]:
    """Flatten one event to tokens: <EVT>, verb, then per-arg role token + entity tokens."""
    out = [EVT, e.verb.lower()]
    for role, entity in sorted(e.args, key=lambda a: a[0].sort_key()):
        if role.is_auxiliary and not include_aux:
            continue
        out.append(role_token(role.code))
        out.extend(entity_tokens(entity))
    return out


def _check_target(target_index: int) -> None:
    if target_index not in RELATION_TARGETS:
        raise IndexError(f"target_index must be one of {RELATION_TARGETS}, got {target_index}")


def serialize_pair(seq: EventSequence, target_index: int, include_aux: bool = True) -> TokenSequence:
    """Pairwise mode: target event followed by the center event, no markers."""
    _check_target(target_index)
    tokens = serialize_event(seq.event(target_index), include_aux) + serialize_event(seq.event(3), include_aux)
    return TokenSequence(tuple(tokens), (), MODE_PAIR, target_index)


def serialize_full(
    seq: EventSequence,
    target_index: int,
    include_aux: bool = True,
    distinct_markers: bool = False,
) -> TokenSequence:
    """Full-sequence mode: all five events in order, a marker before each target.

    ``distinct_markers`` emits <**> before the later-marked event instead of a
    second <*>; position already disambiguates, so the default is a single
    marker token.
    """
    _check_target(target_index)
    marked = sorted((target_index, 3))
    tokens: list[str] = []
    markers: list[int] = []
    for i in range(1, 6):
        if i in marked:
            markers.append(len(tokens))
            use_second = distinct_markers and i == marked[1]
            tokens.append(MARKER_SECOND if use_second else MARKER)
        tokens.extend(serialize_event(seq.event(i), include_aux))
    return TokenSequence(tuple(tokens), tuple(markers), MODE_FULL, target_index)


def parse_event(tokens) -> Event:
    """Inverse of ``serialize_event(e, include_aux=True)`` on normalized events."""
    tokens = list(tokens)
    if not tokens or tokens[0] != EVT:
        raise TokenParseError(f"expected {EVT}", 0)
    if len(tokens) < 2 or is_structural(tokens[1]):
        raise TokenParseError("expected a verb token", 1)
    verb = tokens[1]
    args: list[tuple[ArgumentRole, str]] = []
    i = 2
    while i < len(tokens):
        tok = tokens[i]
        if not is_role_token(tok):
            raise TokenParseError(f"expected a role token, got {tok!r}", i)
        role = ArgumentRole(role_from_token(tok))
        i += 1
        words = []
        while i < len(tokens) and not is_structural(tokens[i]):
            words.append(tokens[i])
            i += 1
        if not words:
            raise TokenParseError(f"role {role.code} has no entity tokens", i)
        args.append((role, " ".join(words)))
    return Event(verb, tuple(args))


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, self.token_to_id[UNK])

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    @property
    def id_to_token(self) -> list:
        inv = [None] * len(self.token_to_id)
        for tok, i in self.token_to_id.items():
            inv[i] = tok
        return inv

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id


def build_vocab(corpus: Corpus, min_count: int = 0, include_aux: bool = True) -> Vocabulary:
    """Vocabulary over the corpus: reserved tokens at the lowest ids, then
    kept word tokens in lexicographic order (order-independent tie-break)."""
    counts: Counter = Counter()
    roles: set[str] = set()
    for seq in corpus.sequences:
        for ev in seq.events:
            counts[ev.verb.lower()] += 1
            for role, entity in ev.args:
                if role.is_auxiliary and not include_aux:
                    continue
                roles.add(role.code)
                for tok in entity_tokens(entity):
                    counts[tok] += 1
    reserved = [PAD, UNK, EVT, MARKER, MARKER_SECOND] + [role_token(r) for r in sorted(roles)]
    words = sorted(tok for tok, n in counts.items() if n >= min_count)
    mapping = {tok: i for i, tok in enumerate(reserved + words)}
    return Vocabulary(mapping)


def _trim_to_length(tokens: list[str], max_len: int) -> list[str]:
    """Drop entity tokens from the longest events until the sequence fits.

    Structural tokens and verbs are never dropped.  Entity tokens are removed
    from the tail of the currently longest event (earliest such event on ties).
    """
    # event spans: [start, end) for each <EVT>-opened block, markers excluded
    def spans(toks):
        out = []
        start = None
        for i, t in enumerate(toks):
            if t == EVT:
                if start is not None:
                    out.append((start, i))
                start = i
            elif t in (MARKER, MARKER_SECOND) and start is not None:
                out.append((start, i))
                start = None
        if start is not None:
            out.append((start, len(toks)))
        return out

    toks = list(tokens)
    while len(toks) > max_len:
        candidates = []
        for start, end in spans(toks):
            droppable = [
                i for i in range(start, end)
                if not is_structural(toks[i]) and i != start + 1  # keep the verb
            ]
            if droppable:
                candidates.append((end - start, start, droppable[-1]))
        if not candidates:
            raise CapacityError(
                f"max_len={max_len} cannot hold the {len(toks)}-token structural skeleton"
            )
        candidates.sort(key=lambda c: (-c[0], c[1]))
        del toks[candidates[0][2]]
    return toks


def encode(ts: TokenSequence, vocab: Vocabulary, max_len: int) -> list[int]:
    """Token ids, <UNK>-substituted, trimmed marker-safely, <PAD>-padded to max_len."""
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    toks = _trim_to_length(list(ts.tokens), max_len)
    pad_id = vocab.id_of(PAD)
    ids = [vocab.id_of(t) for t in toks]
    ids.extend([pad_id] * (max_len - len(ids)))
    return ids
