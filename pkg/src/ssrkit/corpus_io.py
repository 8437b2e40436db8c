"""Corpus JSONL reading and writing.

One sequence per line:
  {"id": str, "events": [5 x {"verb": str, "args": [{"role", "entity"}]}],
   "relations": [{"target": 1|2|4|5, "label": str}]}
A first-line header record {"label_space": name, "meta": {...}} is permitted
(and is what ``save_corpus`` writes); alternatively each line may carry its
own "label_space" field, which must be consistent.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import CorpusFormatError
from .events import (
    ArgumentRole,
    Corpus,
    Event,
    EventSequence,
    RelationInstance,
    get_label_space,
    validate_sequence,
)


def _sequence_from_obj(obj: dict, line_no: int) -> EventSequence:
    try:
        events = tuple(
            Event(
                ev["verb"],
                tuple((ArgumentRole(a["role"]), a["entity"]) for a in ev.get("args", [])),
            )
            for ev in obj["events"]
        )
        relations = tuple(
            RelationInstance(obj["id"], r["target"], r["label"])
            for r in obj.get("relations", [])
        )
        return EventSequence(obj["id"], events, relations)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(line_no, "SCHEMA", str(exc)) from exc


def load_corpus(path, validate: bool = True) -> Corpus:
    path = Path(path)
    label_space_name = None
    meta: dict = {}
    sequences = []
    seen_ids = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_no, "JSON", exc.msg) from exc
            if "id" not in obj and "label_space" in obj:
                if label_space_name is not None:
                    raise CorpusFormatError(line_no, "HEADER", "duplicate header record")
                label_space_name = obj["label_space"]
                meta = obj.get("meta", {})
                continue
            if "label_space" in obj:
                if label_space_name is None:
                    label_space_name = obj["label_space"]
                elif obj["label_space"] != label_space_name:
                    raise CorpusFormatError(line_no, "LABEL_SPACE", "inconsistent label_space")
            seq = _sequence_from_obj(obj, line_no)
            if seq.id in seen_ids:
                raise CorpusFormatError(line_no, "DUP_ID", f"duplicate sequence id {seq.id!r}")
            seen_ids.add(seq.id)
            sequences.append((line_no, seq))
    if label_space_name is None:
        raise CorpusFormatError(0, "LABEL_SPACE", "no label_space declared in file")
    try:
        space = get_label_space(label_space_name)
    except KeyError as exc:
        raise CorpusFormatError(0, "LABEL_SPACE", str(exc)) from exc
    if validate:
        for line_no, seq in sequences:
            violations = validate_sequence(seq, space)
            if violations:
                v = violations[0]
                raise CorpusFormatError(line_no, v.code, v.message)
    return Corpus(space, [s for _, s in sequences], meta)


def corpus_to_lines(corpus: Corpus) -> list[str]:
    header = {"label_space": corpus.label_space.name}
    if corpus.meta:
        header["meta"] = corpus.meta
    lines = [json.dumps(header, sort_keys=True)]
    for seq in corpus.sequences:
        obj = {
            "id": seq.id,
            "events": [
                {
                    "verb": ev.verb,
                    "args": [{"role": r.code, "entity": e} for r, e in ev.args],
                }
                for ev in seq.events
            ],
            "relations": [
                {"target": rel.target_index, "label": rel.label} for rel in seq.relations
            ],
        }
        lines.append(json.dumps(obj, sort_keys=True))
    return lines


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text("\n".join(corpus_to_lines(corpus)) + "\n", encoding="utf-8")
