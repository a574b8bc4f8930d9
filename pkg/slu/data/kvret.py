"""Parser for the public KVRET in-car assistant corpus.

KVRET annotates slot values (not spans) on assistant turns: the wizard fills
``data.slots`` for the request the driver has just made. A driver turn is
therefore tagged with the slot values of the assistant turn that follows it.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .iob import derive_iob
from .session import ASSISTANT, DRIVER, SPEAKERS, DialogueSession, Turn
from .text import tokenize

logger = logging.getLogger(__name__)

SPLITS = ('train', 'dev', 'test')
SPLIT_FILES = {
    'train': 'kvret_train_public.json',
    'dev': 'kvret_dev_public.json',
    'test': 'kvret_test_public.json',
}


class DatasetError(ValueError):
    """Malformed or missing corpus input."""

    def __init__(self, message: str, file: Optional[Union[str, Path]] = None, record: Optional[int] = None):
        location = ''
        if file is not None:
            location = f'{file}'
            if record is not None:
                location += f' record {record}'
            location += ': '
        super().__init__(f'{location}{message}')
        self.file = str(file) if file is not None else None
        self.record = record


@dataclass
class SkipReport:
    """Plain-text log of dropped records and unmatched slot values."""

    lines: List[str] = field(default_factory=list)
    dropped: int = 0
    unmatched: int = 0

    def __len__(self) -> int:
        return len(self.lines)

    def drop(self, split: str, record: int, reason: str):
        self.dropped += 1
        self.lines.append(f'dropped\t{split}\trecord={record}\t{reason}')

    def unmatched_slot(self, split: str, session_id: str, turn: int, slot: str):
        self.unmatched += 1
        self.lines.append(f'unmatched\t{split}\tsession={session_id}\tturn={turn}\tslot={slot}')

    def extend(self, other: "SkipReport"):
        self.lines.extend(other.lines)
        self.dropped += other.dropped
        self.unmatched += other.unmatched

    def write(self, path: Union[str, Path]):
        Path(path).write_text(''.join(f'{line}\n' for line in self.lines), encoding='utf-8')


def _slot_map(dialogue: list, index: int) -> Dict:
    """Slots annotated on the assistant turn right after ``index``, if any."""
    if index + 1 < len(dialogue):
        following = dialogue[index + 1]
        if isinstance(following, dict) and following.get('turn') == ASSISTANT:
            slots = (following.get('data') or {}).get('slots') or {}
            if isinstance(slots, dict):
                return slots
    return {}


def parse_record(record: Dict, split: str, index: int, path, report: SkipReport) -> Optional[DialogueSession]:
    """
    Convert one raw KVRET record into a tagged session.

    Returns:
        DialogueSession, or None when the record has no usable turns
    """
    try:
        dialogue = record['dialogue']
        scenario = record['scenario']
        intent = scenario['task']['intent']
    except (KeyError, TypeError) as e:
        raise DatasetError(f'missing field {e}', path, index) from e

    if not dialogue:
        report.drop(split, index, 'empty dialogue')
        return None

    session_id = str(scenario.get('uuid') or f'{split}-{index:05d}')
    turns = []
    for t, entry in enumerate(dialogue):
        try:
            speaker = entry['turn']
            utterance = entry['data']['utterance']
        except (KeyError, TypeError) as e:
            raise DatasetError(f'turn {t}: missing field {e}', path, index) from e
        if speaker not in SPEAKERS:
            raise DatasetError(f'turn {t}: unknown speaker {speaker!r}', path, index)

        tokens = tokenize(utterance)
        if not tokens:
            report.drop(split, index, f'turn {t} has an empty utterance')
            continue

        if speaker == DRIVER:
            missing: List[str] = []
            tags = derive_iob(tokens, _slot_map(dialogue, t), unmatched=missing)
            for slot in missing:
                report.unmatched_slot(split, session_id, t, slot)
            turns.append(Turn(speaker=DRIVER, tokens=tokens, tags=tags, intent=intent))
        else:
            turns.append(Turn(speaker=ASSISTANT, tokens=tokens))

    if not turns:
        report.drop(split, index, 'no non-empty turns')
        return None
    return DialogueSession(id=session_id, domains=[intent], turns=turns)


def load_kvret_split(path: Union[str, Path], split: str, report: SkipReport) -> List[DialogueSession]:
    """Parse one KVRET split file."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f'missing {split} split file', path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetError(f'malformed JSON at line {e.lineno} column {e.colno}', path) from e
    if not isinstance(data, list):
        raise DatasetError('expected a JSON list of dialogues', path)

    sessions = []
    for index, record in enumerate(data):
        session = parse_record(record, split, index, path, report)
        if session is not None:
            sessions.append(session)
    logger.info('Loaded %d %s sessions from %s', len(sessions), split, path.name)
    return sessions


def load_kvret(raw_dir: Union[str, Path]) -> Tuple[Dict[str, List[DialogueSession]], SkipReport]:
    """
    Load the three KVRET splits.

    Args:
        raw_dir: Directory containing the public release JSON files

    Returns:
        Tuple of (split name → sessions, skip report)
    """
    raw_dir = Path(raw_dir)
    report = SkipReport()
    splits = {
        split: load_kvret_split(raw_dir / SPLIT_FILES[split], split, report)
        for split in SPLITS
    }
    if len(report):
        logger.info('Skip report: %d dropped, %d unmatched slot values', report.dropped, report.unmatched)
    return splits, report
