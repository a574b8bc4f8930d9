"""Dataset statistics: session counts and average turns per conversation."""

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

from .session import DialogueSession


@dataclass(frozen=True)
class SplitStats:
    sessions: int
    turns: int
    driver_turns: int
    domains: int

    @property
    def avg_turns(self) -> float:
        """Turns of both speakers per session."""
        return self.turns / self.sessions if self.sessions else 0.0


@dataclass(frozen=True)
class DatasetStats:
    splits: Dict[str, SplitStats]
    # All splits together; not part of the stats file.
    total: Optional[SplitStats] = None

    def __getitem__(self, split: str) -> SplitStats:
        return self.splits[split]

    def to_dict(self) -> Dict:
        return {
            name: {**asdict(stats), 'avg_turns': round(stats.avg_turns, 4)}
            for name, stats in self.splits.items()
        }

    def write(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DatasetStats":
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        return cls({
            name: SplitStats(**{k: v for k, v in values.items() if k != 'avg_turns'})
            for name, values in data.items()
        })


def split_stats(sessions: Sequence[DialogueSession]) -> SplitStats:
    return SplitStats(
        sessions=len(sessions),
        turns=sum(len(s.turns) for s in sessions),
        driver_turns=sum(len(s.driver_turns) for s in sessions),
        domains=len({d for s in sessions for d in s.domains}),
    )


def compute_stats(splits: Mapping[str, Sequence[DialogueSession]]) -> DatasetStats:
    """Statistics per split, in the mapping's order."""
    return DatasetStats(
        {name: split_stats(sessions) for name, sessions in splits.items()},
        total=split_stats([s for sessions in splits.values() for s in sessions]),
    )
