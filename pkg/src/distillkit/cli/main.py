"""distillkit command line: vocabularies, corpora, distillation, fine-tuning, evaluation, benchmarks."""

from __future__ import annotations

import contextlib
import json
import logging
import os
from collections.abc import Callable, Iterator, Sequence
from pathlib import Path
from typing import Any

import click
from dotenv import load_dotenv
from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from distillkit import __version__
from distillkit.bench import BenchConfig, run_bench, write_bench_csv, write_bench_json
from distillkit.cli.logs import configure_logging
from distillkit.corpus import (
    default_synth_spec,
    label_inventory,
    load_conll,
    load_pairs,
    load_qa,
    relation_pairs,
    synth_corpus,
    train_heldout_split,
    write_pairs,
    write_synth_corpus,
)
from distillkit.corpus.synth import DOMAINS
from distillkit.encoder import (
    PRESET_NAMES,
    EncoderConfig,
    ModelState,
    count_params,
    init_model_state,
    load_checkpoint,
    preset,
    save_checkpoint,
)
from distillkit.encoder.checkpoint import payload_path
from distillkit.errors import DistillKitError
from distillkit.eval import MetricReport, ranked_qa
from distillkit.tokenizer import SPECIAL_TOKENS, Vocab, build_vocab, load_vocab, vocab_stats
from distillkit.train import (
    MLMCorpus,
    RunConfig,
    RunMode,
    TrainReport,
    build_mlm_corpus,
    evaluate_task,
    load_run_config,
    run_distillation,
    run_finetune,
    run_mlm_pretrain,
    write_run_manifest,
)

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
RUNTIME_ERROR = 2
THREADS_ENV = "DISTILLKIT_THREADS"

_TASK_MODES = {"token": RunMode.FINETUNE_TOKEN, "seq": RunMode.FINETUNE_SEQ}

_existing_file = click.Path(exists=True, dir_okay=False, path_type=Path)
_out_dir = click.Path(file_okay=False, path_type=Path)


# ------------------------------------------------------------------ helpers


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """``--config`` and repeatable ``--set`` for commands driven by a RunConfig."""
    func = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Dotted-key override, e.g. plan.suite=tiny_layerwise (repeatable)",
    )(func)
    return click.option(
        "--config",
        "config_path",
        type=click.Path(dir_okay=False, path_type=Path),
        help="JSON run configuration",
    )(func)


def vocab_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option("--cased", is_flag=True, help="Vocabulary preserves case")(func)
    return click.option("--vocab", "vocab_path", type=_existing_file, required=True, help="Vocabulary file")(func)


def _run_config(config_path: Path | None, overrides: Sequence[str], mode: RunMode) -> RunConfig:
    """Resolved run config; the subcommand fixes the mode."""
    if config_path is not None and not config_path.is_file():
        raise click.UsageError(f"config file not found: {config_path}")
    try:
        return load_run_config(config_path, [*overrides, f"mode={mode.value}"])
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{config_path}: not valid JSON ({exc})") from exc
    except ValidationError as exc:
        raise click.UsageError(f"invalid run configuration:\n{exc}") from exc
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _checkpoint_from_config(path: str | None, key: str) -> ModelState:
    if not path:
        raise click.UsageError(f"set {key} in the run config or with --set {key}=PATH")
    if not Path(path).is_file():
        raise click.UsageError(f"{key} not found: {path}")
    return load_checkpoint(path)


def _read_texts(path: Path) -> list[str]:
    """Non-empty lines of a UTF-8 text file."""
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _mlm_corpus(path: Path, vocab: Vocab, config: RunConfig) -> MLMCorpus:
    train, heldout = train_heldout_split(_read_texts(path), config.heldout_fraction)
    return build_mlm_corpus(train, heldout, vocab, config.max_len)


def _student_config(config: RunConfig, vocab: Vocab) -> EncoderConfig:
    try:
        return preset(config.student_preset, vocab_size=len(vocab), **config.student_overrides)
    except ValidationError as exc:
        raise click.UsageError(f"invalid student architecture:\n{exc}") from exc
    except (KeyError, ValueError) as exc:
        raise click.UsageError(f"student_preset: {exc}") from exc


def _save_run(out_dir: Path, state: ModelState, report: TrainReport, checkpoint_name: str) -> list[Path]:
    checkpoint = save_checkpoint(state, out_dir / checkpoint_name)
    metrics = out_dir / "metrics.json"
    metrics.write_text(json.dumps(report.final_metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for name, value in sorted(report.final_metrics.items()):
        click.echo(f"{name}: {value:.4f}")
    return [checkpoint, payload_path(checkpoint), report.to_csv(out_dir / "report.csv"), metrics]


def _manifest_config(config: RunConfig, **inputs: Any) -> dict[str, Any]:
    return {
        "run": config.model_dump(mode="json"),
        "inputs": {k: str(v) if isinstance(v, Path) else v for k, v in inputs.items()},
    }


@contextlib.contextmanager
def _thread_limits() -> Iterator[None]:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        yield
        return
    try:
        limit = int(raw)
    except ValueError:
        raise click.UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if limit < 1:
        raise click.UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    with threadpool_limits(limits=limit):
        logger.debug(f"Kernel threads capped at {limit}")
        yield


# ----------------------------------------------------------------- commands


@click.group()
@click.version_option(__version__, prog_name="distillkit")
@click.option("--json-logs", is_flag=True, help="Emit one JSON log record per line")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx: click.Context, json_logs: bool, verbose: bool) -> None:
    """Knowledge distillation for small BERT-style encoders."""
    ctx.obj = {"run_id": configure_logging(json_logs=json_logs, verbose=verbose)}


@cli.command("build-vocab")
@click.option(
    "--corpus", "corpus_paths", type=_existing_file, multiple=True, required=True, help="UTF-8 text (repeatable)"
)
@click.option("--size", type=click.IntRange(min=len(SPECIAL_TOKENS) + 1), default=8000, show_default=True)
@click.option("--cased", is_flag=True, help="Keep case instead of lower-casing")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
def build_vocab_command(corpus_paths: tuple[Path, ...], size: int, cased: bool, out_path: Path) -> None:
    """Induce a WordPiece vocabulary from text files."""
    texts = [text for path in corpus_paths for text in _read_texts(path)]
    vocab = build_vocab(texts, size, cased=cased)
    vocab.save(out_path)
    click.echo(json.dumps(vocab_stats(vocab), indent=2, sort_keys=True))
    config = {"corpus": [str(p) for p in corpus_paths], "size": size, "cased": cased}
    write_run_manifest(out_path.parent, "build-vocab", config, None, [out_path])


@cli.command()
@click.option("--domain", type=click.Choice(sorted(DOMAINS)), default="biomedical", show_default=True)
@click.option("--sentences", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--relations", is_flag=True, help="Also write sentence-level relation pairs")
@click.option("--out", "out_dir", type=_out_dir, required=True)
def synth(domain: str, sentences: int, seed: int, relations: bool, out_dir: Path) -> None:
    """Generate a labelled synthetic corpus."""
    spec = default_synth_spec(domain, num_sentences=sentences)
    corpus = synth_corpus(spec, rng_seed=seed)
    artifacts = list(write_synth_corpus(corpus, out_dir).values())
    if relations:
        artifacts.append(write_pairs(relation_pairs(corpus.train), out_dir / "train.pairs"))
        artifacts.append(write_pairs(relation_pairs(corpus.heldout), out_dir / "heldout.pairs"))
    labels = out_dir / "labels.json"
    labels.write_text(json.dumps(corpus.label_set) + "\n", encoding="utf-8")
    artifacts.append(labels)
    click.echo(f"{len(corpus.train)} train / {len(corpus.heldout)} held-out sentences in {out_dir}")
    write_run_manifest(out_dir, "synth", spec, seed, artifacts)


@cli.command()
@run_options
@vocab_options
@click.option("--corpus", "corpus_path", type=_existing_file, required=True, help="UTF-8 text, one sentence per line")
@click.option("--out", "out_dir", type=_out_dir, required=True)
def distill(
    config_path: Path | None,
    overrides: tuple[str, ...],
    vocab_path: Path,
    cased: bool,
    corpus_path: Path,
    out_dir: Path,
) -> None:
    """Distil a teacher checkpoint into a smaller student."""
    config = _run_config(config_path, overrides, RunMode.DISTILL)
    vocab = load_vocab(vocab_path, cased=cased)
    teacher = _checkpoint_from_config(config.teacher_checkpoint, "teacher_checkpoint")
    student_config = _student_config(config, vocab)
    corpus = _mlm_corpus(corpus_path, vocab, config)
    student, report = run_distillation(teacher, student_config, corpus, config, out_dir=out_dir)
    artifacts = _save_run(out_dir, student, report, "student.ckpt")
    manifest = _manifest_config(config, vocab=vocab_path, cased=cased, corpus=corpus_path)
    write_run_manifest(out_dir, "distill", manifest, config.seed, artifacts)


@cli.command()
@run_options
@vocab_options
@click.option("--corpus", "corpus_path", type=_existing_file, required=True, help="UTF-8 text, one sentence per line")
@click.option(
    "--preset",
    "preset_name",
    type=click.Choice(PRESET_NAMES),
    help="Start from random weights of this architecture when init_checkpoint is unset",
)
@click.option("--out", "out_dir", type=_out_dir, required=True)
def pretrain(
    config_path: Path | None,
    overrides: tuple[str, ...],
    vocab_path: Path,
    cased: bool,
    corpus_path: Path,
    preset_name: str | None,
    out_dir: Path,
) -> None:
    """MLM pretraining from init_checkpoint, or from scratch with --preset."""
    config = _run_config(config_path, overrides, RunMode.PRETRAIN_MLM)
    vocab = load_vocab(vocab_path, cased=cased)
    if config.init_checkpoint or preset_name is None:
        init = _checkpoint_from_config(config.init_checkpoint, "init_checkpoint")
    else:
        init = init_model_state(preset(preset_name, vocab_size=len(vocab)), seed=config.seed)
        logger.info(f"Pretraining {preset_name} from random weights ({count_params(init.config):,} parameters)")
    corpus = _mlm_corpus(corpus_path, vocab, config)
    state, report = run_mlm_pretrain(init, corpus, config, out_dir=out_dir)
    artifacts = _save_run(out_dir, state, report, "model.ckpt")
    manifest = _manifest_config(config, vocab=vocab_path, cased=cased, corpus=corpus_path, preset=preset_name)
    write_run_manifest(out_dir, "pretrain", manifest, config.seed, artifacts)


@cli.command()
@run_options
@vocab_options
@click.option("--task", type=click.Choice(sorted(_TASK_MODES)), required=True, help="token (CoNLL) or seq (pairs)")
@click.option("--train", "train_path", type=_existing_file, required=True)
@click.option("--eval", "eval_path", type=_existing_file, help="Evaluation split; defaults to the training data")
@click.option("--out", "out_dir", type=_out_dir, required=True)
def finetune(
    config_path: Path | None,
    overrides: tuple[str, ...],
    vocab_path: Path,
    cased: bool,
    task: str,
    train_path: Path,
    eval_path: Path | None,
    out_dir: Path,
) -> None:
    """Fine-tune init_checkpoint with a token or sequence classification head."""
    mode = _TASK_MODES[task]
    config = _run_config(config_path, overrides, mode)
    vocab = load_vocab(vocab_path, cased=cased)
    init = _checkpoint_from_config(config.init_checkpoint, "init_checkpoint")
    loader = load_conll if mode is RunMode.FINETUNE_TOKEN else load_pairs
    dataset = loader(train_path)
    eval_dataset = loader(eval_path) if eval_path else None
    labels = label_inventory(dataset)
    state, report = run_finetune(init, dataset, config, vocab, labels, eval_dataset, out_dir=out_dir)
    artifacts = _save_run(out_dir, state, report, "model.ckpt")
    labels_path = out_dir / "labels.json"
    labels_path.write_text(json.dumps(labels) + "\n", encoding="utf-8")
    artifacts.append(labels_path)
    manifest = _manifest_config(config, vocab=vocab_path, cased=cased, train=train_path, eval=eval_path)
    write_run_manifest(out_dir, "finetune", manifest, config.seed, artifacts)


@cli.command("eval")
@click.option("--task", type=click.Choice(["token", "seq", "qa"]), required=True)
@click.option("--data", "data_path", type=_existing_file, required=True, help="CoNLL, pairs or QA TSV file")
@click.option("--checkpoint", type=_existing_file, help="Fine-tuned model (token and seq tasks)")
@click.option("--vocab", "vocab_path", type=_existing_file, help="Vocabulary (token and seq tasks)")
@click.option("--cased", is_flag=True)
@click.option("--labels", "labels_path", type=_existing_file, help="Label names; default labels.json beside the model")
@click.option("--predictions", type=_existing_file, help="JSON list of ranked candidate lists (qa task)")
@click.option("--max-len", type=click.IntRange(min=3), default=64, show_default=True)
@click.option("--rule", type=click.Choice(["first", "majority"]), default="first", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), help="Write the report as JSON")
def eval_command(
    task: str,
    data_path: Path,
    checkpoint: Path | None,
    vocab_path: Path | None,
    cased: bool,
    labels_path: Path | None,
    predictions: Path | None,
    max_len: int,
    rule: str,
    out_path: Path | None,
) -> None:
    """Score a fine-tuned model (or ranked QA predictions) on labelled data."""
    if task == "qa":
        if predictions is None:
            raise click.UsageError("--predictions is required for the qa task")
        records = load_qa(data_path)
        candidates = json.loads(predictions.read_text(encoding="utf-8"))
        report = ranked_qa([r.answer for r in records], candidates)
        name = predictions.stem
    else:
        if checkpoint is None or vocab_path is None:
            raise click.UsageError(f"--checkpoint and --vocab are required for the {task} task")
        labels_path = labels_path or checkpoint.parent / "labels.json"
        if not labels_path.is_file():
            raise click.UsageError(f"label file not found: {labels_path} (pass --labels)")
        labels = json.loads(labels_path.read_text(encoding="utf-8"))
        mode = _TASK_MODES[task]
        data = (load_conll if mode is RunMode.FINETUNE_TOKEN else load_pairs)(data_path)
        state = load_checkpoint(checkpoint)
        vocab = load_vocab(vocab_path, cased=cased)
        report = evaluate_task(state, data, vocab, labels, mode, max_len, "majority" if rule == "majority" else "first")
        name = checkpoint.stem
    click.echo(report.to_table(name))
    if out_path is not None:
        _write_report(report, out_path, task, data_path)


def _write_report(report: MetricReport, out_path: Path, task: str, data_path: Path) -> None:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    report.to_json(out_path)
    write_run_manifest(out_path.parent, "eval", {"task": task, "data": str(data_path)}, None, [out_path])


@cli.command()
@click.option(
    "--preset",
    "presets",
    type=click.Choice(PRESET_NAMES),
    multiple=True,
    default=("desk_teacher", "desk_student"),
    show_default=True,
)
@click.option("--batch", "batch_sizes", type=click.IntRange(min=1), multiple=True, help="Batch sizes (repeatable)")
@click.option("--seq-len", "seq_lens", type=click.IntRange(min=1), multiple=True, help="Lengths (repeatable)")
@click.option("--warmups", type=int, default=5, show_default=True)
@click.option("--repetitions", type=int, default=30, show_default=True)
@click.option("--budget-bytes", type=int, help="Skip grid points estimated above this")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", "out_dir", type=_out_dir, required=True)
def bench(
    presets: tuple[str, ...],
    batch_sizes: tuple[int, ...],
    seq_lens: tuple[int, ...],
    warmups: int,
    repetitions: int,
    budget_bytes: int | None,
    seed: int,
    out_dir: Path,
) -> None:
    """Compare parameters, latency and peak memory of encoder presets."""
    fields: dict[str, Any] = {"warmups": warmups, "repetitions": repetitions, "seed": seed}
    if batch_sizes:
        fields["batch_sizes"] = list(batch_sizes)
    if seq_lens:
        fields["seq_lens"] = list(seq_lens)
    if budget_bytes is not None:
        fields["memory_budget_bytes"] = budget_bytes
    try:
        bench_config = BenchConfig(**fields)
    except ValidationError as exc:
        raise click.UsageError(f"invalid benchmark settings:\n{exc}") from exc
    results = run_bench([preset(name) for name in presets], bench_config)
    for r in results:
        timing = f"skipped ({r.reason})" if r.skipped else f"{r.median_ms:.2f} ms median, {r.p90_ms:.2f} ms p90"
        click.echo(f"{r.config:<14} {r.params:>12,} params  batch={r.batch:<3} seq_len={r.seq_len:<4} {timing}")
    artifacts = [write_bench_csv(results, out_dir / "bench.csv"), write_bench_json(results, out_dir / "bench.json")]
    config = {"presets": list(presets), "bench": bench_config.model_dump(mode="json")}
    write_run_manifest(out_dir, "bench", config, seed, artifacts)


@cli.command("inspect")
@click.option("--checkpoint", type=_existing_file, required=True)
def inspect_checkpoint(checkpoint: Path) -> None:
    """Print a checkpoint's architecture and parameter count."""
    state = load_checkpoint(checkpoint)
    click.echo(state.config.model_dump_json(indent=2))
    click.echo(f"parameters: {count_params(state.config):,}")
    for kind, num_labels in sorted(state.head_labels.items()):
        click.echo(f"head.{kind}: {num_labels} labels")


# --------------------------------------------------------------------- entry


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return its exit code.

    0 on success, 1 for usage problems (bad flags, missing or invalid
    configuration), 2 for runtime failures.
    """
    load_dotenv()
    try:
        with _thread_limits():
            result = cli.main(
                args=list(argv) if argv is not None else None,
                prog_name="distillkit",
                standalone_mode=False,
            )
    except click.ClickException as exc:
        exc.show()
        return USAGE_ERROR
    except click.Abort:
        click.echo("Aborted.", err=True)
        return USAGE_ERROR
    except DistillKitError as exc:
        logger.debug("Run failed", exc_info=True)
        click.echo(f"Error: {exc}", err=True)
        return RUNTIME_ERROR
    except Exception as exc:
        logger.debug("Run failed", exc_info=True)
        click.echo(f"Error: {type(exc).__name__}: {exc}", err=True)
        return RUNTIME_ERROR
    return result if isinstance(result, int) else 0
