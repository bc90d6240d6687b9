"""Corpus vocabulary and the whitespace/punctuation tokenizer.

Tokens are lowercased alphanumeric runs. Two ids are reserved: [EMPTY]
(whole-note placeholder for blank text) and [UNK] (out-of-vocabulary, also
the masking baseline used by the explainer).
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

EMPTY_TOKEN = "[EMPTY]"
UNK_TOKEN = "[UNK]"

DEFAULT_MIN_FREQ = 2
DEFAULT_MAX_SIZE = 20_000

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def split_tokens(text: str) -> list[str]:
    """Lowercased word tokens, punctuation discarded."""
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def split_tokens_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """(token, start, end) character spans into the original text."""
    return [
        (m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)
    ]


@dataclass
class Vocabulary:
    tokens: list[str]  # index == token id; tokens[0:2] are the reserved pair

    def __post_init__(self):
        if self.tokens[:2] != [EMPTY_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with the reserved tokens")
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def empty_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    @classmethod
    def build(
        cls,
        corpus: list[str],
        min_freq: int = DEFAULT_MIN_FREQ,
        max_size: int = DEFAULT_MAX_SIZE,
    ) -> "Vocabulary":
        """Count word tokens over the corpus; keep those with freq >= min_freq,
        most frequent first, ties broken lexicographically, capped at max_size."""
        counts: Counter[str] = Counter()
        for text in corpus:
            counts.update(split_tokens(text))
        kept = sorted(
            (t for t, c in counts.items() if c >= min_freq),
            key=lambda t: (-counts[t], t),
        )
        room = max_size - 2
        return cls([EMPTY_TOKEN, UNK_TOKEN] + kept[:room])

    def token_id(self, token: str) -> int:
        return self.index.get(token, 1)


def tokenize(note: str, vocab: Vocabulary, l_max: int = 128) -> list[int]:
    """Map a note to token ids: lowercase, split, OOV -> [UNK], clip to l_max.

    Blank text maps to the single [EMPTY] id so the sequence is never empty.
    Total function: never raises.
    """
    words = split_tokens(note)
    if not words:
        return [vocab.empty_id]
    return [vocab.token_id(w) for w in words[:l_max]]
