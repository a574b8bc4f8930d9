"""Evaluation report: assemble metrics and export them as JSON or CSV."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from .metrics import SlotMetrics, intent_accuracy, slot_prf, token_accuracy, token_prf


@dataclass
class EvaluationReport:
    """Slot scores (chunk and token level) and intent accuracy of one evaluation set."""

    slot: SlotMetrics
    token: SlotMetrics
    intent_acc: float
    token_acc: float
    n_utterances: int

    def to_dict(self) -> Dict:
        """
        Report layout. Slot scores are percentages, intent accuracy a fraction.

        Returns:
            ``{slot: {p, r, f1, macro_f1}, intent_acc, per_slot_type, n_utterances, ...}``
        """
        slot = self.slot.to_dict()
        return {
            'slot': {key: slot[key] for key in ('p', 'r', 'f1', 'macro_f1')},
            'slot_undefined': self.slot.undefined,
            'intent_acc': self.intent_acc,
            'per_slot_type': {
                kind: {key: value for key, value in metrics.to_dict().items()
                       if key in ('p', 'r', 'f1', 'correct', 'predicted', 'gold')}
                for kind, metrics in self.slot.per_type.items()
            },
            'token_level': {key: self.token.to_dict()[key] for key in ('p', 'r', 'f1')},
            'token_acc': self.token_acc,
            'n_utterances': self.n_utterances,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_json(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + '\n', encoding='utf-8')

    def per_type_frame(self) -> pd.DataFrame:
        """One row per gold slot type."""
        rows = [{'slot_type': kind, **{k: v for k, v in values.items()}}
                for kind, values in self.to_dict()['per_slot_type'].items()]
        return pd.DataFrame(rows, columns=['slot_type', 'p', 'r', 'f1', 'correct', 'predicted', 'gold'])


def build_report(
    pred_intents: Sequence,
    gold_intents: Sequence,
    pred_tags: Sequence[Sequence[str]],
    gold_tags: Sequence[Sequence[str]],
) -> EvaluationReport:
    """
    Compute every metric over aligned predictions and references.

    Args:
        pred_intents: Predicted intent per utterance
        gold_intents: Gold intent per utterance
        pred_tags: Predicted IOB tags per utterance
        gold_tags: Gold IOB tags per utterance
    """
    return EvaluationReport(
        slot=slot_prf(pred_tags, gold_tags),
        token=token_prf(pred_tags, gold_tags),
        intent_acc=intent_accuracy(pred_intents, gold_intents),
        token_acc=token_accuracy(pred_tags, gold_tags),
        n_utterances=len(gold_intents),
    )


def write_csv(rows: Union[pd.DataFrame, List[Dict]], path: Union[str, Path], columns: Sequence[str] = None) -> Path:
    """Write a table to CSV with a fixed column order."""
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator='\n')
    return path
