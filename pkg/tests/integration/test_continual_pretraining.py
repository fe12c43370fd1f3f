"""Continued MLM pretraining on a shifted domain.

A 2-layer student is pretrained on the synthetic biomedical corpus, then
pretrained further on the clinical-notes corpus. Takes a few minutes;
deselected unless ``-m slow`` is given.
"""

import pytest

from distillkit.corpus import default_synth_spec, synth_corpus
from distillkit.encoder import init_model_state, preset
from distillkit.tokenizer import build_vocab
from distillkit.train import (
    OptimizerConfig,
    RunConfig,
    RunMode,
    build_mlm_corpus,
    evaluate_mlm,
    heldout_batches,
    run_mlm_pretrain,
)

pytestmark = [pytest.mark.integration, pytest.mark.slow]

GENERIC_STEPS = 1000
DOMAIN_STEPS = 500


def _mlm_config(steps: int) -> RunConfig:
    return RunConfig(
        mode=RunMode.PRETRAIN_MLM,
        steps=steps,
        batch_size=16,
        max_len=64,
        eval_every=250,
        optimizer=OptimizerConfig(learning_rate=1e-3),
    )


@pytest.fixture(scope="module")
def corpora():
    texts = {}
    for name, domain, seed in (("generic", "biomedical", 0), ("domain", "clinical", 1)):
        corpus = synth_corpus(default_synth_spec(domain, num_sentences=600), rng_seed=seed)
        texts[name] = ([s.text for s in corpus.train], [s.text for s in corpus.heldout])
    vocab = build_vocab(texts["generic"][0] + texts["domain"][0], target_size=1000)
    return {name: build_mlm_corpus(train, heldout, vocab, max_len=64) for name, (train, heldout) in texts.items()}


@pytest.fixture(scope="module")
def generic_model(corpora):
    vocab_size = len(corpora["generic"].vocab)
    init = init_model_state(preset("desk_student", vocab_size=vocab_size), seed=0)
    state, _ = run_mlm_pretrain(init, corpora["generic"], _mlm_config(GENERIC_STEPS))
    return state


def test_domain_pretraining_lowers_domain_loss(corpora, generic_model):
    """Further MLM on the clinical corpus lowers its held-out MLM loss."""
    config = _mlm_config(DOMAIN_STEPS)
    heldout = heldout_batches(corpora["domain"], config.masking, config.batch_size, config.seed)
    adapted, _ = run_mlm_pretrain(generic_model, corpora["domain"], config)
    before, _ = evaluate_mlm(generic_model, heldout)
    after, _ = evaluate_mlm(adapted, heldout)
    assert after < before
