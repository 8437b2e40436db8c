"""Reformulating commonsense KB records into 5-event pretraining sequences.

Each record carries a current event sentence plus Before / Intent / After
inference sentences.  The current event becomes the center event; the flanks
are sampled with the constraint that events 1-2 come from before or intent
sentences and events 4-5 from intent or after sentences, and each relation
label is the name of the source list.

Sentences are turned into events by an ordered rule-based predicate-argument
extractor (subject -> Arg0, object -> Arg1, trailing prepositional phrase ->
auxiliary role keyed on the preposition).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InsufficientInferencesError
from .events import (
    ArgumentRole,
    Corpus,
    Event,
    EventSequence,
    KB_PRETRAIN_SPACE,
    RelationInstance,
    get_label_space,
)

_ORDINALS = (
    "first", "second", "third", "fourth", "fifth",
    "sixth", "seventh", "eighth", "ninth", "tenth",
    "eleventh", "twelfth",
)


def _ordinal(n: int) -> str:
    if 1 <= n <= len(_ORDINALS):
        return _ORDINALS[n - 1]
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10 if n % 100 not in (11, 12, 13) else 0, "th")
    return f"{n}{suffix}"


_PERSON_TAG_RE = re.compile(r"\bperson\s*(\d+)\b", re.IGNORECASE)
_BARE_NUMBER_RE = re.compile(r"\b(\d+)\b")


def normalize_person_tags(sentence: str) -> str:
    """Rewrite numeric person references to ordinal free text.

    "person 1", "Person2", and bare "1" all become "first person".  Idempotent:
    the output contains no digits to rewrite.
    """
    out = _PERSON_TAG_RE.sub(lambda m: f"{_ordinal(int(m.group(1)))} person", sentence)
    out = _BARE_NUMBER_RE.sub(lambda m: f"{_ordinal(int(m.group(1)))} person", out)
    return out


_STOPWORDS = frozenset(
    "a an the this that these those to of and or but is are was were be been "
    "being am not no".split()
)

# preposition / particle -> auxiliary role for the trailing phrase
_PREP_ROLES = {
    "to": "ADir", "toward": "ADir", "towards": "ADir", "away": "ADir",
    "from": "ADir", "into": "ADir", "out": "ADir",
    "in": "AScn", "at": "AScn", "on": "AScn", "inside": "AScn", "near": "AScn",
    "by": "AMnr", "with": "AMnr", "without": "AMnr", "quickly": "AMnr",
    "slowly": "AMnr", "quietly": "AMnr",
}

# irregular or suffix-ambiguous forms the strip table cannot recover
_LEMMA_EXCEPTIONS = {
    "is": "be", "are": "be", "was": "be", "were": "be", "been": "be",
    "has": "have", "had": "have", "goes": "go", "went": "go", "gets": "get",
    "got": "get", "ran": "run", "running": "run", "sat": "sit", "says": "say",
    "said": "say", "does": "do", "did": "do", "makes": "make", "made": "make",
    "wants": "want", "tries": "try", "tried": "try", "leaves": "leave",
    "left": "leave", "sees": "see", "saw": "see", "takes": "take", "took": "take",
}

_VERB_SUFFIX_RE = re.compile(r"(?:s|ed|ing)$")
_VOWELS = "aeiou"


def lemmatize(word: str) -> str:
    """Small suffix-strip lemmatizer (-s, -ed, -ing with doubling rules)."""
    if word in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(("sses", "shes", "ches", "xes", "zes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 3:
        return word[:-1]
    for suffix in ("ed", "ing"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stem = word[: -len(suffix)]
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
                return stem[:-1]  # stopped -> stop
            if stem.endswith("i"):
                return stem[:-1] + "y"  # tried -> try
            return stem
    return word


def _looks_like_verb(word: str, position: int) -> bool:
    if word in _STOPWORDS or word in _PREP_ROLES:
        return False
    if word in _LEMMA_EXCEPTIONS:
        return True
    # a subject must precede; plural-noun false positives are tolerated
    return position >= 1 and _VERB_SUFFIX_RE.search(word) is not None


def _tokenize(sentence: str) -> list[str]:
    return re.findall(r"[a-z0-9']+", sentence.lower())


def extract_ssr(sentence: str) -> Event:
    """Rule-based predicate-argument extraction; first matching rule wins.

    Unparseable sentences fall back to a verb-only event whose verb is the
    first non-stopword token.
    """
    if not sentence.strip():
        raise ValueError("empty sentence")
    words = _tokenize(sentence)
    verb_pos = next((i for i, w in enumerate(words) if _looks_like_verb(w, i)), None)
    if verb_pos is None or verb_pos == 0:
        verb_source = next((w for w in words if w not in _STOPWORDS), words[0])
        return Event(lemmatize(verb_source))
    verb = lemmatize(words[verb_pos])
    args: list[tuple[ArgumentRole, str]] = []
    subject = words[:verb_pos]
    while subject and subject[0] in ("a", "an", "the", "this", "that"):
        subject = subject[1:]
    if subject:
        args.append((ArgumentRole("Arg0"), " ".join(subject)))
    rest = words[verb_pos + 1:]
    prep_pos = next((i for i, w in enumerate(rest) if w in _PREP_ROLES), None)
    if prep_pos is not None:
        obj = [w for w in rest[:prep_pos] if w not in _STOPWORDS]
        phrase = rest[prep_pos:]
        role = _PREP_ROLES[rest[prep_pos]]
        if obj:
            args.append((ArgumentRole("Arg1"), " ".join(obj)))
        if phrase:
            args.append((ArgumentRole(role), " ".join(phrase)))
    else:
        obj = [w for w in rest if w not in _STOPWORDS]
        if obj:
            args.append((ArgumentRole("Arg1"), " ".join(obj)))
    return Event(verb, tuple(args)).normalized()


@dataclass(frozen=True)
class KBRecord:
    id: str
    current: str
    before: tuple[str, ...] = ()
    intent: tuple[str, ...] = ()
    after: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.current:
            raise ValueError(f"record {self.id}: empty current event")

    def has_enough_inferences(self) -> bool:
        return (len(self.before) + len(self.intent) >= 2
                and len(self.intent) + len(self.after) >= 2)


def load_kb_records(path) -> list[KBRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            records.append(
                KBRecord(
                    id=str(obj["id"]),
                    current=obj["event"],
                    before=tuple(obj.get("before", [])),
                    intent=tuple(obj.get("intent", [])),
                    after=tuple(obj.get("after", [])),
                )
            )
    return records


def _sentence_event(sentence: str) -> Event:
    return extract_ssr(normalize_person_tags(sentence))


def build_sequences(rec: KBRecord, n: int, seed: int) -> list[EventSequence]:
    """Sample ``n`` labeled 5-event sequences from one record.

    Events 1-2 are drawn without replacement from before+intent sentences,
    events 4-5 from intent+after; an intent sentence appears on both sides of
    the center only when list sizes force it, and such sequences carry a
    ``reused_intent`` marker in their id suffix.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not rec.has_enough_inferences():
        raise InsufficientInferencesError(
            f"record {rec.id}: need >=2 before+intent and >=2 intent+after sentences"
        )
    early = [("Before", s) for s in rec.before] + [("Intent", s) for s in rec.intent]
    late = [("Intent", s) for s in rec.intent] + [("After", s) for s in rec.after]
    rng = random.Random(f"{seed}:{rec.id}")
    center = _sentence_event(rec.current)
    out = []
    for k in range(n):
        first = rng.sample(early, 2)
        used = {s for _, s in first}
        late_avail = [item for item in late if item[1] not in used]
        if len(late_avail) >= 2:
            second = rng.sample(late_avail, 2)
            reused = False
        else:
            second = rng.sample(late, 2)
            reused = True
        seq_id = f"{rec.id}-{k:04d}" + ("-reused-intent" if reused else "")
        picks = {1: first[0], 2: first[1], 4: second[0], 5: second[1]}
        events = []
        relations = []
        for idx in range(1, 6):
            if idx == 3:
                events.append(center)
                continue
            label, sentence = picks[idx]
            events.append(_sentence_event(sentence))
            relations.append(RelationInstance(seq_id, idx, label))
        out.append(EventSequence(seq_id, tuple(events), tuple(relations)))
    return out


def reformulate(records: list[KBRecord], n: int, seed: int) -> Corpus:
    """Build a kb-pretrain corpus; records without enough inferences are skipped."""
    sequences = []
    skipped = 0
    for rec in records:
        if not rec.has_enough_inferences():
            skipped += 1
            continue
        sequences.extend(build_sequences(rec, n, seed))
    meta = {"kb": {"records": len(records), "skipped": skipped, "n_per_record": n, "seed": seed}}
    return Corpus(KB_PRETRAIN_SPACE, sequences, meta)


_MAP_TO_4 = {"Before": "Enables", "After": "Causes", "Intent": "ReactionTo"}

KEEP3 = "keep3"
MAP_TO_4 = "map4"


def map_labels(seq: EventSequence, mapping_mode: str) -> EventSequence:
    """Keep the 3-label space or map it onto the 4-class space with a fixed table."""
    if mapping_mode == KEEP3:
        return seq
    if mapping_mode != MAP_TO_4:
        raise ValueError(f"unknown mapping mode {mapping_mode!r}")
    relations = []
    for rel in seq.relations:
        if rel.label not in _MAP_TO_4:
            raise ValueError(f"unknown label {rel.label!r}")
        relations.append(RelationInstance(rel.sequence_id, rel.target_index, _MAP_TO_4[rel.label]))
    return EventSequence(seq.id, seq.events, tuple(relations))


def map_corpus(corpus: Corpus, mapping_mode: str) -> Corpus:
    if mapping_mode == KEEP3:
        return corpus
    return Corpus(
        get_label_space("vidsitu"),
        [map_labels(seq, mapping_mode) for seq in corpus.sequences],
        dict(corpus.meta),
    )
