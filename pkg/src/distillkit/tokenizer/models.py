"""Data models for the tokenizer module."""

from dataclasses import dataclass, field

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"

# Order defines the ids of a freshly built vocabulary.
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN)

CONTINUATION_PREFIX = "##"

# Label value carried by special and padding positions; excluded from losses
# and metrics. Distinct from every label id (label ids are >= 0).
IGNORE_INDEX = -100


@dataclass(frozen=True)
class Encoding:
    """One encoded text.

    ``word_index`` maps each position to the source word it came from, -1 for
    CLS, SEP and padding. ``num_words`` counts the words of the source text,
    including any dropped by truncation.
    """

    token_ids: list[int]
    word_index: list[int]
    attention_mask: list[int]
    num_words: int
    tokens: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def words_kept(self) -> int:
        """Number of distinct source words that survived truncation."""
        kept = [w for w in self.word_index if w >= 0]
        return max(kept) + 1 if kept else 0
