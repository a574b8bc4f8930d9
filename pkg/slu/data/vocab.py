"""Token and label inventories, and id-encoded sessions."""

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .iob import OUTSIDE
from .session import DialogueSession, make_examples

logger = logging.getLogger(__name__)

PAD = '<pad>'
UNK = '<unk>'
RESERVED = (PAD, UNK)
PAD_ID = 0
UNK_ID = 1


def slot_type(tag: str) -> Optional[str]:
    """Slot type of an IOB tag, None for ``O``."""
    if tag == OUTSIDE:
        return None
    if len(tag) > 2 and tag[:2] in ('B-', 'I-'):
        return tag[2:]
    raise ValueError(f"Unknown IOB tag: {tag!r}")


@dataclass
class Vocab:
    """
    Token, slot-label and intent inventories.

    Token ids are contiguous from 0 with ``<pad>`` = 0 and ``<unk>`` = 1.
    Slot labels start with ``O`` followed by ``B-X``/``I-X`` pairs.
    """

    tokens: List[str]
    slot_labels: List[str]
    intents: List[str]
    _token_ids: Dict[str, int] = field(init=False, repr=False)
    _slot_ids: Dict[str, int] = field(init=False, repr=False)
    _intent_ids: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[:len(RESERVED)]) != RESERVED:
            raise ValueError(f"Vocab must start with {RESERVED}")
        if not self.slot_labels or self.slot_labels[0] != OUTSIDE:
            raise ValueError("Slot labels must start with 'O'")
        for label in self.slot_labels:
            if label.startswith('I-') and f"B-{label[2:]}" not in self.slot_labels:
                raise ValueError(f"Slot label {label} has no matching B- label")
        self._token_ids = {t: i for i, t in enumerate(self.tokens)}
        self._slot_ids = {t: i for i, t in enumerate(self.slot_labels)}
        self._intent_ids = {t: i for i, t in enumerate(self.intents)}
        if len(self._token_ids) != len(self.tokens):
            raise ValueError("Duplicate tokens in vocab")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_slots(self) -> int:
        return len(self.slot_labels)

    @property
    def n_intents(self) -> int:
        return len(self.intents)

    @property
    def slot_types(self) -> List[str]:
        return [label[2:] for label in self.slot_labels if label.startswith('B-')]

    def token_id(self, token: str) -> int:
        return self._token_ids.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.token_id(t) for t in tokens]

    def slot_ids(self, tags: Sequence[str]) -> List[int]:
        try:
            return [self._slot_ids[t] for t in tags]
        except KeyError as e:
            raise ValueError(f"Slot label {e.args[0]!r} is not in the vocabulary") from e

    def decode_slots(self, ids: Iterable[int]) -> List[str]:
        return [self.slot_labels[int(i)] for i in ids]

    def intent_id(self, intent: str) -> int:
        if intent not in self._intent_ids:
            raise ValueError(f"Intent {intent!r} is not in the vocabulary")
        return self._intent_ids[intent]

    def to_dict(self) -> Dict:
        return {
            'tokens': list(self.tokens),
            'slot_labels': list(self.slot_labels),
            'intents': list(self.intents),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Vocab":
        return cls(tokens=list(data['tokens']), slot_labels=list(data['slot_labels']),
                   intents=list(data['intents']))

    def fingerprint(self) -> str:
        """SHA256 of the canonical JSON form; stored in checkpoint headers."""
        sha256 = hashlib.sha256()
        sha256.update(json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False).encode('utf-8'))
        return sha256.hexdigest()

    def save(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)
            f.write('\n')

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocab":
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def build_vocab(
    sessions: Sequence[DialogueSession],
    min_freq: int = 1,
    label_sessions: Optional[Sequence[DialogueSession]] = None,
) -> Vocab:
    """
    Build the vocabulary from training sessions.

    Token ids are assigned by (frequency desc, token asc). Label inventories
    are collected from ``sessions`` plus ``label_sessions`` so that dev/test
    gold labels are representable; tokens never come from ``label_sessions``.

    Args:
        sessions: Training sessions
        min_freq: Minimum token count to get its own id
        label_sessions: Extra sessions contributing slot types and intents only

    Returns:
        Vocab
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts = Counter(tok for s in sessions for turn in s.turns for tok in turn.tokens)
    for reserved in RESERVED:
        counts.pop(reserved, None)
    ranked = sorted((item for item in counts.items() if item[1] >= min_freq), key=lambda kv: (-kv[1], kv[0]))

    types = set()
    intents = set()
    for s in list(sessions) + list(label_sessions or []):
        for turn in s.turns:
            if turn.intent is not None:
                intents.add(turn.intent)
            for tag in turn.tags or []:
                kind = slot_type(tag)
                if kind is not None:
                    types.add(kind)
    labels = [OUTSIDE]
    for kind in sorted(types):
        labels.extend([f"B-{kind}", f"I-{kind}"])

    vocab = Vocab(tokens=list(RESERVED) + [tok for tok, _ in ranked], slot_labels=labels, intents=sorted(intents))
    logger.info("Vocab: %d tokens, %d slot labels, %d intents", len(vocab), vocab.n_slots, vocab.n_intents)
    return vocab


@dataclass(frozen=True)
class EncodedExample:
    """An SLU example in id form; ``history`` holds one id tuple per prior turn."""

    session_id: str
    turn_index: int
    history: Tuple[Tuple[int, ...], ...]
    tokens: Tuple[int, ...]
    intent: int
    tags: Tuple[int, ...]


@dataclass(frozen=True)
class EncodedSession:
    """All turns of a session in id form plus its SLU examples."""

    id: str
    turns: Tuple[Tuple[int, ...], ...]
    examples: Tuple[EncodedExample, ...]

    def __len__(self) -> int:
        return len(self.turns)


def encode_session(session: DialogueSession, vocab: Vocab) -> EncodedSession:
    turns = tuple(tuple(vocab.encode(t.tokens)) for t in session.turns)
    examples = tuple(
        EncodedExample(
            session_id=ex.session_id,
            turn_index=ex.turn_index,
            history=turns[:ex.turn_index],
            tokens=turns[ex.turn_index],
            intent=vocab.intent_id(ex.intent),
            tags=tuple(vocab.slot_ids(ex.tags)),
        )
        for ex in make_examples(session)
    )
    return EncodedSession(id=session.id, turns=turns, examples=examples)


def encode_corpus(sessions: Iterable[DialogueSession], vocab: Vocab) -> List[EncodedSession]:
    return [encode_session(s, vocab) for s in sessions]
