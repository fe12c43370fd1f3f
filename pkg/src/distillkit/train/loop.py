"""The optimisation loop shared by every run mode."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from typing import TypeVar

from distillkit.errors import NonFiniteError
from distillkit.numerics import GradientTape, Tensor
from distillkit.train.data import BatchPrefetcher
from distillkit.train.models import RunConfig, TrainRecord, TrainReport
from distillkit.train.optim import AdamW, LinearWarmupDecay, optimizer_step

logger = logging.getLogger(__name__)

B = TypeVar("B")

StepLoss = Callable[[int, B], tuple[Tensor, dict[str, float]]]


def optimise(
    trainable: dict[str, Tensor],
    produce: Callable[[int], B],
    step_loss: StepLoss[B],
    total_steps: int,
    config: RunConfig,
    evaluate: Callable[[], float | None] | None = None,
    on_record: Callable[[int], None] | None = None,
) -> TrainReport:
    """Minimise ``step_loss`` over ``total_steps`` batches.

    Every ``config.eval_every`` steps, and at the last step, the loss of the
    step and ``evaluate()`` (computed before that step's update) are added to
    the report.

    Raises:
        NonFiniteError: A step produced a NaN or infinite loss.
    """
    tape = GradientTape(trainable)
    optimizer = AdamW(trainable, config.optimizer)
    schedule = LinearWarmupDecay(config.optimizer.learning_rate, total_steps, config.optimizer.warmup_fraction)
    report = TrainReport()
    window_ms = 0.0
    window_steps = 0

    for step, batch in enumerate(BatchPrefetcher(produce, total_steps, config.prefetch)):
        started = time.perf_counter()
        record_now = step % config.eval_every == 0 or step == total_steps - 1
        accuracy = evaluate() if record_now and evaluate is not None else None

        loss, components = step_loss(step, batch)
        value = loss.item()
        if not math.isfinite(value):
            raise NonFiniteError(f"loss is {value} at step {step}; components: {components}")
        grads = tape.gradient(loss)
        stats = optimizer_step(optimizer, grads, step, schedule)

        window_ms += (time.perf_counter() - started) * 1000.0
        window_steps += 1
        if record_now:
            report.add(
                TrainRecord(
                    step=step,
                    loss=value,
                    accuracy=accuracy,
                    ms_per_step=window_ms / window_steps,
                    components=dict(components),
                )
            )
            accuracy_text = "n/a" if accuracy is None else f"{accuracy:.4f}"
            logger.info(
                f"step {step}/{total_steps} loss={value:.4f} acc={accuracy_text} "
                f"lr={stats.lr:.2e} grad_norm={stats.grad_norm:.3f} ms/step={window_ms / window_steps:.1f}"
            )
            window_ms, window_steps = 0.0, 0
            if on_record is not None:
                on_record(step)
    return report
