"""Integration tests: distillation, MLM pretraining and fine-tuning runs end to end."""

import math

import numpy as np
import pytest

from distillkit.corpus import LabeledSequence, default_synth_spec, load_conll, synth_corpus
from distillkit.distill import DistillPlan, DistillSuite
from distillkit.encoder import init_model_state, load_checkpoint
from distillkit.errors import IncompatiblePlanError, ShapeMismatchError
from distillkit.numerics import Precision
from distillkit.tokenizer import build_vocab
from distillkit.train import (
    OptimizerConfig,
    RunConfig,
    RunMode,
    build_mlm_corpus,
    run_distillation,
    run_finetune,
    run_mlm_pretrain,
)

pytestmark = pytest.mark.integration


@pytest.fixture(scope="module")
def synth_texts():
    corpus = synth_corpus(default_synth_spec("biomedical", num_sentences=60), rng_seed=0)
    return [s.text for s in corpus.train], [s.text for s in corpus.heldout]


@pytest.fixture(scope="module")
def synth_vocab(synth_texts):
    train, heldout = synth_texts
    return build_vocab(train + heldout, target_size=400)


@pytest.fixture
def mlm_corpus(synth_texts, synth_vocab):
    train, heldout = synth_texts
    return build_mlm_corpus(train, heldout, synth_vocab, max_len=16)


@pytest.fixture
def teacher(config_factory, synth_vocab):
    config = config_factory(num_layers=4, vocab_size=len(synth_vocab), max_position=16)
    return init_model_state(config, seed=2)


def _distill_config(suite=DistillSuite.DISTIL_TRIPLE, steps=4, **overrides) -> RunConfig:
    fields = {
        "mode": RunMode.DISTILL,
        "teacher_checkpoint": "teacher.ckpt",
        "steps": steps,
        "eval_every": 2,
        "batch_size": 4,
        "max_len": 16,
        "precision": Precision.FLOAT64,
        "plan": DistillPlan(suite=suite),
        "optimizer": OptimizerConfig(learning_rate=1e-3, warmup_fraction=0.0),
    }
    fields.update(overrides)
    return RunConfig(**fields)


class TestDistillation:
    """Test distillation runs for every suite."""

    def test_zero_steps(self, teacher, mlm_corpus, config_factory, synth_vocab):
        """No steps returns the initial student with an empty report."""
        student_config = config_factory(num_layers=2, vocab_size=len(synth_vocab), max_position=16)
        student, report = run_distillation(teacher, student_config, mlm_corpus, _distill_config(steps=0))
        assert report.records == []
        assert student.config.num_layers == 2
        np.testing.assert_array_equal(student["embeddings.token"].data, teacher["embeddings.token"].data)

    @pytest.mark.parametrize(
        ("suite", "student_fields"),
        [
            (DistillSuite.DISTIL_TRIPLE, {"num_layers": 2}),
            (DistillSuite.TINY_LAYERWISE, {"num_layers": 2, "hidden_dim": 4}),
            (DistillSuite.COMPACT_HYBRID, {"num_layers": 2}),
        ],
    )
    def test_suite_runs(self, suite, student_fields, teacher, mlm_corpus, config_factory, synth_vocab):
        """Each suite produces finite reports at every report point."""
        student_config = config_factory(vocab_size=len(synth_vocab), max_position=16, **student_fields)
        student, report = run_distillation(teacher, student_config, mlm_corpus, _distill_config(suite))
        assert report.steps == [0, 2, 3]
        assert all(math.isfinite(loss) for loss in report.losses)
        assert report.records[0].components
        assert "heldout_masked_accuracy" in report.final_metrics
        assert student.config == student_config

    def test_mobile_suite(self, config_factory, bottleneck_factory, mlm_corpus, synth_vocab):
        """A bottleneck student distils from a same-depth, same-width teacher."""
        vocab_size = len(synth_vocab)
        teacher = init_model_state(config_factory(num_layers=2, vocab_size=vocab_size, max_position=16), seed=3)
        student_config = bottleneck_factory(num_layers=2, vocab_size=vocab_size, max_position=16)
        _, report = run_distillation(
            teacher, student_config, mlm_corpus, _distill_config(DistillSuite.MOBILE_LAYERWISE)
        )
        assert set(report.records[0].components) >= {"mlm"}
        assert all(math.isfinite(loss) for loss in report.losses)

    def test_incompatible_plan(self, teacher, mlm_corpus, config_factory, synth_vocab):
        """A mobile plan with a shallower student is rejected before training."""
        student_config = config_factory(num_layers=2, vocab_size=len(synth_vocab), max_position=16)
        with pytest.raises(IncompatiblePlanError):
            run_distillation(teacher, student_config, mlm_corpus, _distill_config(DistillSuite.MOBILE_LAYERWISE))

    def test_deterministic(self, teacher, mlm_corpus, config_factory, synth_vocab):
        """Same seed, same losses and weights."""
        student_config = config_factory(num_layers=2, vocab_size=len(synth_vocab), max_position=16, dropout=0.1)
        first, first_report = run_distillation(teacher, student_config, mlm_corpus, _distill_config())
        second, second_report = run_distillation(teacher, student_config, mlm_corpus, _distill_config())
        assert first_report.losses == second_report.losses
        for name, tensor in first.named_parameters():
            np.testing.assert_array_equal(tensor.data, second[name].data)

    def test_checkpoints_written(self, teacher, mlm_corpus, config_factory, synth_vocab, temp_dir):
        """With an output directory the student is checkpointed at report points."""
        student_config = config_factory(num_layers=2, vocab_size=len(synth_vocab), max_position=16)
        student, _ = run_distillation(teacher, student_config, mlm_corpus, _distill_config(), out_dir=temp_dir)
        restored = load_checkpoint(temp_dir / "student.ckpt")
        for name, tensor in student.named_parameters():
            np.testing.assert_array_equal(restored[name].data, tensor.data)


class TestMLMPretrain:
    """Test continued MLM pretraining."""

    def test_init_not_modified(self, teacher, mlm_corpus):
        """Training works on a copy of the initial weights."""
        before = teacher["embeddings.token"].data.copy()
        config = _distill_config(mode=RunMode.PRETRAIN_MLM, teacher_checkpoint=None, plan=None)
        state, report = run_mlm_pretrain(teacher, mlm_corpus, config)
        np.testing.assert_array_equal(teacher["embeddings.token"].data, before)
        assert not np.array_equal(state["embeddings.token"].data, before)
        assert report.component("mlm") == report.losses

    def test_zero_steps(self, teacher, mlm_corpus):
        """No steps returns an unchanged copy."""
        config = _distill_config(mode=RunMode.PRETRAIN_MLM, teacher_checkpoint=None, plan=None, steps=0)
        state, report = run_mlm_pretrain(teacher, mlm_corpus, config)
        assert report.records == []
        np.testing.assert_array_equal(state["embeddings.token"].data, teacher["embeddings.token"].data)


def _finetune_config(mode=RunMode.FINETUNE_TOKEN, epochs=60, **overrides) -> RunConfig:
    fields = {
        "mode": mode,
        "epochs": epochs,
        "batch_size": 4,
        "max_len": 12,
        "eval_every": 10,
        "precision": Precision.FLOAT64,
        "optimizer": OptimizerConfig(learning_rate=1e-2, warmup_fraction=0.0, weight_decay=0.0),
    }
    fields.update(overrides)
    return RunConfig(**fields)


class TestFinetune:
    """Test task fine-tuning."""

    @pytest.fixture
    def model(self, config_factory, sample_vocab):
        return init_model_state(config_factory(hidden_dim=16, vocab_size=len(sample_vocab), max_position=16), seed=4)

    def test_token_task_fits(self, model, sample_vocab, conll_file):
        """Two sentences are fitted: the loss falls and entity metrics are reported."""
        dataset = load_conll(conll_file)
        state, report = run_finetune(model, dataset, _finetune_config(), sample_vocab)
        assert report.losses[-1] < 0.5 * report.losses[0]
        assert state.head_labels == {"token": 4}
        assert {"train_accuracy", "precision", "recall", "f1"} <= set(report.final_metrics)

    def test_sequence_task_fits(self, model, sample_vocab, sample_sentences):
        """Sentence labels are fitted and scored with macro P/R/F."""
        dataset = [
            LabeledSequence(tuple(text.split()), label="drug" if i % 2 == 0 else "gene")
            for i, text in enumerate(sample_sentences)
        ]
        config = _finetune_config(RunMode.FINETUNE_SEQ, batch_size=6)
        state, report = run_finetune(model, dataset, config, sample_vocab)
        assert report.losses[-1] < report.losses[0]
        assert state.head_labels == {"sequence": 2}
        assert 0.0 <= report.final_metrics["f1"] <= 1.0

    def test_head_label_mismatch(self, model, sample_vocab, conll_file):
        """A model with a head for other labels is rejected."""
        dataset = load_conll(conll_file)
        state, _ = run_finetune(model, dataset, _finetune_config(epochs=1), sample_vocab)
        with pytest.raises(ShapeMismatchError):
            run_finetune(state, dataset, _finetune_config(epochs=1), sample_vocab, labels=["O", "B-X"])

    def test_wrong_mode(self, model, sample_vocab, conll_file):
        """Fine-tuning needs a fine-tuning mode."""
        config = _finetune_config(mode=RunMode.PRETRAIN_MLM)
        with pytest.raises(ValueError):
            run_finetune(model, load_conll(conll_file), config, sample_vocab)

    def test_empty_dataset(self, model, sample_vocab):
        """An empty dataset is rejected."""
        with pytest.raises(ValueError):
            run_finetune(model, [], _finetune_config(), sample_vocab)


@pytest.mark.slow
class TestDeskExperiments:
    """Longer runs checking that training actually learns."""

    def test_token_task_memorised(self, config_factory, sample_vocab, conll_file):
        """Enough epochs reach perfect training accuracy."""
        model = init_model_state(config_factory(hidden_dim=16, vocab_size=len(sample_vocab), max_position=16), seed=4)
        _, report = run_finetune(model, load_conll(conll_file), _finetune_config(epochs=300), sample_vocab)
        assert report.final_metrics["train_accuracy"] == 1.0
        assert report.final_metrics["f1"] == 1.0

    def test_distillation_lowers_loss(self, teacher, mlm_corpus, config_factory, synth_vocab):
        """Two hundred tiny-suite steps lower the layer-wise loss."""
        student_config = config_factory(num_layers=2, hidden_dim=4, vocab_size=len(synth_vocab), max_position=16)
        config = _distill_config(
            DistillSuite.TINY_LAYERWISE,
            steps=200,
            eval_every=50,
            optimizer=OptimizerConfig(learning_rate=1e-2, warmup_fraction=0.0),
        )
        _, report = run_distillation(teacher, student_config, mlm_corpus, config)
        assert report.losses[-1] < report.losses[0]
