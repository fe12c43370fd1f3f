"""Corpus ingestion, synthetic corpora and MLM masking."""

from distillkit.corpus.loaders import (
    label_inventory,
    load_conll,
    load_pairs,
    load_qa,
    write_conll,
    write_pairs,
)
from distillkit.corpus.masking import apply_masking, mask_batch, pack_blocks
from distillkit.corpus.models import (
    LabeledSequence,
    MaskedBatch,
    MaskingConfig,
    QARecord,
    SynthCorpus,
    SynthSpec,
)
from distillkit.corpus.synth import (
    bio_label_set,
    default_synth_spec,
    relation_pairs,
    synth_corpus,
    train_heldout_split,
    write_synth_corpus,
)

__all__ = [
    "LabeledSequence",
    "MaskedBatch",
    "MaskingConfig",
    "QARecord",
    "SynthCorpus",
    "SynthSpec",
    "apply_masking",
    "bio_label_set",
    "default_synth_spec",
    "label_inventory",
    "load_conll",
    "load_pairs",
    "load_qa",
    "mask_batch",
    "pack_blocks",
    "relation_pairs",
    "synth_corpus",
    "train_heldout_split",
    "write_conll",
    "write_pairs",
    "write_synth_corpus",
]
