"""ssrkit: structural symbolic representations for video event-relation prediction."""

__version__ = "0.1.0"

from .events import (
    ArgumentRole,
    Corpus,
    Event,
    EventSequence,
    KB_PRETRAIN_SPACE,
    LabelSpace,
    RelationInstance,
    VIDSITU_SPACE,
    classify_role,
    get_label_space,
    validate_sequence,
)
from .codec import (
    TokenSequence,
    Vocabulary,
    build_vocab,
    encode,
    parse_event,
    serialize_event,
    serialize_full,
    serialize_pair,
)
from .corpus_io import load_corpus, save_corpus

__all__ = [
    "ArgumentRole",
    "Corpus",
    "Event",
    "EventSequence",
    "KB_PRETRAIN_SPACE",
    "LabelSpace",
    "RelationInstance",
    "TokenSequence",
    "VIDSITU_SPACE",
    "Vocabulary",
    "build_vocab",
    "classify_role",
    "encode",
    "get_label_space",
    "load_corpus",
    "parse_event",
    "save_corpus",
    "serialize_event",
    "serialize_full",
    "serialize_pair",
    "validate_sequence",
]
