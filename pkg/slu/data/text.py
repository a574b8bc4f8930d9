"""Text normalization and tokenization for dialogue utterances."""

import re
from typing import List

from unidecode import unidecode

TRAILING_PUNCTUATION = '.,!?;:'


def normalize_text(text: str) -> str:
    """
    Normalize an utterance before tokenization.

    - Converts to lowercase
    - Removes accents
    - Collapses whitespace

    Args:
        text: Raw utterance

    Returns:
        Normalized text
    """
    if not text:
        return ""

    text = unidecode(text).lower()
    text = re.sub(r'\s+', ' ', text)

    return text.strip()


def tokenize(text: str) -> List[str]:
    """
    Split an utterance into tokens.

    Whitespace separates tokens and trailing punctuation is split off into
    tokens of its own ("6pm." → "6pm", ".").

    Args:
        text: Raw utterance

    Returns:
        List of lowercase tokens
    """
    tokens = []
    for word in normalize_text(text).split(' '):
        if not word:
            continue
        trailing = []
        while len(word) > 1 and word[-1] in TRAILING_PUNCTUATION:
            trailing.insert(0, word[-1])
            word = word[:-1]
        tokens.append(word)
        tokens.extend(trailing)
    return tokens
