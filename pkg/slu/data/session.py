"""Dialogue sessions, SLU examples and the canonical JSONL format."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

logger = logging.getLogger(__name__)

DRIVER = "driver"
ASSISTANT = "assistant"
SPEAKERS = (DRIVER, ASSISTANT)


@dataclass
class Turn:
    """One utterance; driver turns carry IOB tags and an intent."""

    speaker: str
    tokens: List[str]
    tags: Optional[List[str]] = None
    intent: Optional[str] = None

    @property
    def is_driver(self) -> bool:
        return self.speaker == DRIVER

    def to_dict(self) -> Dict:
        data = {'speaker': self.speaker, 'tokens': list(self.tokens)}
        if self.tags is not None:
            data['tags'] = list(self.tags)
        if self.intent is not None:
            data['intent'] = self.intent
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "Turn":
        return cls(
            speaker=data['speaker'],
            tokens=list(data['tokens']),
            tags=list(data['tags']) if data.get('tags') is not None else None,
            intent=data.get('intent'),
        )


@dataclass
class DialogueSession:
    """Ordered turns of one conversation and the domain(s) it covers."""

    id: str
    domains: List[str]
    turns: List[Turn] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.turns)

    @property
    def driver_turns(self) -> List[int]:
        return [i for i, t in enumerate(self.turns) if t.is_driver]

    def validate(self):
        """Check speaker names and tag/token alignment."""
        for i, turn in enumerate(self.turns):
            if turn.speaker not in SPEAKERS:
                raise ValueError(f"Session {self.id} turn {i}: unknown speaker {turn.speaker!r}")
            if turn.tags is not None and len(turn.tags) != len(turn.tokens):
                raise ValueError(
                    f"Session {self.id} turn {i}: {len(turn.tags)} tags for {len(turn.tokens)} tokens"
                )

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'domains': list(self.domains),
            'turns': [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "DialogueSession":
        return cls(
            id=str(data['id']),
            domains=list(data['domains']),
            turns=[Turn.from_dict(t) for t in data['turns']],
        )


@dataclass
class SluExample:
    """A driver turn with its full preceding history (both speakers)."""

    session_id: str
    turn_index: int
    history: List[List[str]]
    tokens: List[str]
    intent: str
    tags: List[str]


def make_examples(session: DialogueSession) -> List[SluExample]:
    """
    One example per driver turn; the history is every earlier turn.

    Args:
        session: Tagged dialogue session

    Returns:
        SLU examples in turn order
    """
    examples = []
    for i, turn in enumerate(session.turns):
        if not turn.is_driver:
            continue
        if turn.tags is None or turn.intent is None:
            raise ValueError(f"Session {session.id} turn {i}: driver turn is not tagged")
        examples.append(SluExample(
            session_id=session.id,
            turn_index=i,
            history=[list(t.tokens) for t in session.turns[:i]],
            tokens=list(turn.tokens),
            intent=turn.intent,
            tags=list(turn.tags),
        ))
    return examples


def write_jsonl(sessions: Iterable[DialogueSession], path: Union[str, Path]) -> int:
    """
    Write sessions, one JSON object per line.

    Returns:
        Number of sessions written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for session in sessions:
            f.write(json.dumps(session.to_dict(), ensure_ascii=False))
            f.write('\n')
            count += 1
    return count


def read_jsonl(path: Union[str, Path]) -> List[DialogueSession]:
    """Read sessions written by ``write_jsonl``."""
    sessions = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                session = DialogueSession.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(f"{path}:{line_no}: malformed session ({e})") from e
            session.validate()
            sessions.append(session)
    logger.debug("Read %d sessions from %s", len(sessions), path)
    return sessions
