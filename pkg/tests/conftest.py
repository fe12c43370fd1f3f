"""Pytest configuration and shared fixtures for all tests."""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from distillkit.corpus import MaskedBatch, mask_batch
from distillkit.encoder import EncoderConfig, EncoderVariant, ModelState, init_model_state
from distillkit.tokenizer import IGNORE_INDEX, Vocab, build_vocab

# ================== Path Fixtures ==================


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp = tempfile.mkdtemp()
    yield Path(temp)
    shutil.rmtree(temp)


# ================== Text Fixtures ==================

SAMPLE_SENTENCES = [
    "aspirin reduces diabetes in patients .",
    "mutations in brca1 are linked to asthma .",
    "patients with lupus received insulin daily .",
    "tp53 expression was elevated in mice with anemia .",
    "treatment with heparin lowers egfr activity .",
    "the risk of migraine rises when kras is silenced .",
]


@pytest.fixture
def sample_sentences() -> list[str]:
    return list(SAMPLE_SENTENCES)


@pytest.fixture
def sample_vocab() -> Vocab:
    """Uncased vocabulary induced from the sample sentences."""
    return build_vocab(SAMPLE_SENTENCES, target_size=120)


@pytest.fixture
def conll_file(temp_dir) -> Path:
    """Two-sentence CoNLL file."""
    content = "aspirin\tB-Chemical\nreduces\tO\ndiabetes\tB-Disease\n\nbreast\tB-Disease\ncancer\tI-Disease\n"
    path = temp_dir / "train.conll"
    path.write_text(content, encoding="utf-8")
    return path


# ================== Model Fixtures ==================


def make_config(num_layers: int = 2, hidden_dim: int = 8, num_heads: int = 2, **overrides) -> EncoderConfig:
    """Toy encoder: small enough for exhaustive gradient checks."""
    fields = {
        "num_layers": num_layers,
        "hidden_dim": hidden_dim,
        "num_heads": num_heads,
        "vocab_size": 16,
        "max_position": 12,
        "ffn_expansion": 2.0,
        "dropout": 0.0,
        "init_std": 0.3,
    }
    fields.update(overrides)
    return EncoderConfig(**fields)


def make_bottleneck_config(num_layers: int = 2, **overrides) -> EncoderConfig:
    fields = {
        "hidden_dim": 8,
        "embed_dim": 4,
        "bottleneck_dim": 4,
        "num_heads": 2,
        "num_ffn_blocks": 2,
        "variant": EncoderVariant.BOTTLENECK,
    }
    fields.update(overrides)
    return make_config(num_layers=num_layers, **fields)


def make_batch(
    vocab_size: int = 16, batch: int = 2, length: int = 6, pad_from: int | None = 5, seed: int = 0
) -> MaskedBatch:
    """Random ordinary ids, optional right padding, two masked positions per row."""
    rng = np.random.default_rng(seed)
    ids = rng.integers(5, vocab_size, size=(batch, length))
    ids[:, 0] = 2
    mask = np.ones_like(ids)
    if pad_from is not None:
        ids[-1, pad_from:] = 0
        mask[-1, pad_from:] = 0
    indicator = np.zeros_like(ids)
    indicator[:, 1] = 1
    indicator[:, 3] = 1
    labels = np.where(indicator == 1, ids, IGNORE_INDEX)
    corrupted = np.where(indicator == 1, 4, ids)
    return MaskedBatch(
        input_ids=corrupted.astype(np.int64),
        labels=labels.astype(np.int64),
        mask_indicator=indicator.astype(np.int64),
        attention_mask=mask.astype(np.int64),
    )


@pytest.fixture
def toy_config() -> EncoderConfig:
    return make_config()


@pytest.fixture
def toy_state(toy_config) -> ModelState:
    return init_model_state(toy_config, seed=1)


@pytest.fixture
def teacher_state() -> ModelState:
    """4-layer teacher matching the 2-layer toy student's width."""
    return init_model_state(make_config(num_layers=4), seed=2)


@pytest.fixture
def toy_batch() -> MaskedBatch:
    return make_batch()


@pytest.fixture
def masked_sample(sample_vocab) -> MaskedBatch:
    """Masked batch drawn from the sample vocabulary."""
    rng = np.random.default_rng(3)
    ids = rng.integers(5, len(sample_vocab), size=(4, 10))
    ids[:, 0] = sample_vocab.cls_id
    ids[:, -1] = sample_vocab.sep_id
    return mask_batch(ids, sample_vocab, select_rate=0.3, rng_seed=3)


@pytest.fixture
def config_factory():
    """``make_config`` for tests that need several shapes."""
    return make_config


@pytest.fixture
def bottleneck_factory():
    return make_bottleneck_config


@pytest.fixture
def batch_factory():
    return make_batch
