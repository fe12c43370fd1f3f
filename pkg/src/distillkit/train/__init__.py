"""Training loops: distillation, MLM pretraining and fine-tuning."""

from distillkit.train.config import apply_overrides, dump_run_config, load_run_config, parse_override
from distillkit.train.data import BatchPrefetcher, build_mlm_corpus, heldout_batches, mlm_batch_producer
from distillkit.train.finetune import (
    classification_loss,
    encode_labeled,
    evaluate_task,
    predict_sequence_labels,
    predict_token_labels,
    run_finetune,
)
from distillkit.train.loop import optimise
from distillkit.train.manifest import MANIFEST_NAME, RunManifest, sha256_file, write_run_manifest
from distillkit.train.mlm import evaluate_mlm, masked_accuracy, run_distillation, run_mlm_pretrain
from distillkit.train.models import (
    LabeledBatch,
    MLMCorpus,
    OptimizerConfig,
    RunConfig,
    RunMode,
    TrainRecord,
    TrainReport,
)
from distillkit.train.optim import (
    AdamW,
    LinearWarmupDecay,
    StepStats,
    clip_by_global_norm,
    global_norm,
    optimizer_step,
)

__all__ = [
    "MANIFEST_NAME",
    "AdamW",
    "BatchPrefetcher",
    "LabeledBatch",
    "LinearWarmupDecay",
    "MLMCorpus",
    "OptimizerConfig",
    "RunConfig",
    "RunManifest",
    "RunMode",
    "StepStats",
    "TrainRecord",
    "TrainReport",
    "apply_overrides",
    "build_mlm_corpus",
    "classification_loss",
    "clip_by_global_norm",
    "dump_run_config",
    "encode_labeled",
    "evaluate_mlm",
    "evaluate_task",
    "global_norm",
    "heldout_batches",
    "load_run_config",
    "masked_accuracy",
    "mlm_batch_producer",
    "optimise",
    "optimizer_step",
    "parse_override",
    "predict_sequence_labels",
    "predict_token_labels",
    "run_distillation",
    "run_finetune",
    "run_mlm_pretrain",
    "sha256_file",
    "write_run_manifest",
]
