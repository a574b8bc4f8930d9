"""Contextual SLU model variants."""

from enum import Enum
from typing import Optional

ATTENTION = "attention"
SEQUENTIAL = "sequential"


class SluVariant(Enum):
    """
    How the knowledge vector ``h`` is retrieved and injected into the tagger.

    - NOMEM: no memory, single-turn tagger
    - MEMNET: attention retrieval, ``h`` concatenated to every tagger step
    - SDEN: sequential retrieval, ``h`` initializes the tagger's LSTM state
    - SDEN_DAGGER: sequential retrieval, ``h`` concatenated to every step
    """
    NOMEM = "nomem"
    MEMNET = "memnet"
    SDEN = "sden"
    SDEN_DAGGER = "sden_dagger"

    @classmethod
    def parse(cls, name: "str | SluVariant") -> "SluVariant":
        """Accept enum values, enum names and CamelCase spellings (``SdenDagger``)."""
        if isinstance(name, SluVariant):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "nomem": cls.NOMEM,
            "memnet": cls.MEMNET,
            "sden": cls.SDEN,
            "sden_dagger": cls.SDEN_DAGGER,
            "sdendagger": cls.SDEN_DAGGER,
            "sden+": cls.SDEN_DAGGER,
        }
        if key not in aliases:
            raise ValueError(f"Unknown variant: {name} (expected one of {[v.value for v in cls]})")
        return aliases[key]

    @property
    def retrieval(self) -> Optional[str]:
        if self is SluVariant.NOMEM:
            return None
        if self is SluVariant.MEMNET:
            return ATTENTION
        return SEQUENTIAL

    @property
    def uses_memory(self) -> bool:
        return self is not SluVariant.NOMEM

    @property
    def concatenates_knowledge(self) -> bool:
        return self in (SluVariant.MEMNET, SluVariant.SDEN_DAGGER)

    @property
    def initializes_from_knowledge(self) -> bool:
        return self is SluVariant.SDEN
