"""NER, relation extraction and ranked-answer metrics."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Collection, Sequence
from typing import Literal

from sklearn.metrics import precision_recall_fscore_support

from distillkit.eval.models import ClassScores, MetricKind, MetricReport

logger = logging.getLogger(__name__)

Span = tuple[int, int, str]
OUTSIDE = "O"


def bio_to_spans(tags: Sequence[str]) -> list[Span]:
    """BIO tags -> ``(start, end, type)`` spans with an exclusive ``end``.

    An ``I-X`` that does not continue an open ``X`` span (after ``O``, at the
    start, or after a different type) is read as ``B-X``.
    """
    spans: list[Span] = []
    start: int | None = None
    current: str | None = None

    def close(end: int) -> None:
        nonlocal start, current
        if start is not None and current is not None:
            spans.append((start, end, current))
        start, current = None, None

    for i, tag in enumerate(tags):
        if tag == OUTSIDE:
            close(i)
            continue
        prefix, sep, kind = tag.partition("-")
        if not sep or prefix not in ("B", "I") or not kind:
            raise ValueError(f"invalid BIO tag {tag!r} at position {i}")
        if prefix == "B" or start is None or current != kind:
            close(i)
            start, current = i, kind
    close(len(tags))
    return spans


def collapse_to_words(
    subword_labels: Sequence[str],
    word_index: Sequence[int],
    num_words: int,
    rule: Literal["first", "majority"] = "first",
) -> list[str]:
    """Word-level labels from per-position predictions.

    ``first`` takes each word's first sub-word, ``majority`` its most frequent
    sub-word label (earliest on ties). Words with no surviving sub-word
    (truncated away) get ``O``.
    """
    if len(subword_labels) != len(word_index):
        raise ValueError(f"{len(subword_labels)} labels for {len(word_index)} positions")
    votes: dict[int, list[str]] = {}
    for label, word in zip(subword_labels, word_index, strict=True):
        if word >= 0:
            votes.setdefault(word, []).append(label)
    words = []
    for w in range(num_words):
        pieces = votes.get(w)
        if not pieces:
            words.append(OUTSIDE)
        elif rule == "first":
            words.append(pieces[0])
        elif rule == "majority":
            words.append(Counter(pieces).most_common(1)[0][0])
        else:
            raise ValueError(f"unknown collapse rule {rule!r}")
    return words


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def entity_f1(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> MetricReport:
    """Exact-match entity P/R/F1, micro-averaged over all sentences, plus per-type scores."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    tp = fp = fn = 0
    per_type: dict[str, Counter[str]] = {}
    for i, (g_tags, p_tags) in enumerate(zip(gold, pred, strict=True)):
        if len(g_tags) != len(p_tags):
            raise ValueError(f"sentence {i}: {len(g_tags)} gold tags but {len(p_tags)} predicted")
        g_spans, p_spans = set(bio_to_spans(g_tags)), set(bio_to_spans(p_tags))
        tp += len(g_spans & p_spans)
        fp += len(p_spans - g_spans)
        fn += len(g_spans - p_spans)
        for outcome, spans in (("tp", g_spans & p_spans), ("fp", p_spans - g_spans), ("fn", g_spans - p_spans)):
            for span in spans:
                per_type.setdefault(span[2], Counter())[outcome] += 1

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    classes = {}
    for kind, c in per_type.items():
        p = c["tp"] / (c["tp"] + c["fp"]) if c["tp"] + c["fp"] else 0.0
        r = c["tp"] / (c["tp"] + c["fn"]) if c["tp"] + c["fn"] else 0.0
        classes[kind] = ClassScores(precision=p, recall=r, f1=_f1(p, r), support=c["tp"] + c["fn"])
    logger.debug(f"entity_f1: tp={tp} fp={fp} fn={fn}")
    return MetricReport(
        kind=MetricKind.ENTITY,
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
        per_class=classes,
        count=len(gold),
    )


def macro_prf(
    gold: Sequence[str],
    pred: Sequence[str],
    classes: Collection[str],
    positive: str | None = None,
) -> MetricReport:
    """Macro-averaged P/R/F over ``classes``, or positive-class P/R/F when ``positive`` is set.

    A predicted label outside ``classes`` becomes an extra class with no gold
    support; its F of 0 enters the macro average.
    """
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold labels but {len(pred)} predicted")
    if not gold:
        raise ValueError("macro_prf needs at least one example")
    labels = list(dict.fromkeys(classes))
    labels.extend(sorted({p for p in pred if p not in labels}))
    if positive is not None:
        if positive not in labels:
            raise ValueError(f"positive class {positive!r} is not among {labels}")
        eval_labels = [positive]
    else:
        eval_labels = labels
    p, r, f, support = precision_recall_fscore_support(
        list(gold), list(pred), labels=eval_labels, average=None, zero_division=0
    )
    per_class = {
        label: ClassScores(precision=float(pi), recall=float(ri), f1=float(fi), support=int(si))
        for label, pi, ri, fi, si in zip(eval_labels, p, r, f, support, strict=True)
    }
    return MetricReport(
        kind=MetricKind.BINARY if positive is not None else MetricKind.MACRO,
        precision=float(p.mean()),
        recall=float(r.mean()),
        f1=float(f.mean()),
        per_class=per_class,
        count=len(gold),
    )


def ranked_qa(gold: Sequence[Collection[str] | str], pred: Sequence[Sequence[str]]) -> MetricReport:
    """Strict accuracy, lenient accuracy and mean reciprocal rank of ranked answers."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} questions but {len(pred)} candidate lists")
    if not gold:
        raise ValueError("ranked_qa needs at least one question")
    strict = lenient = reciprocal = 0.0
    for answers, candidates in zip(gold, pred, strict=True):
        accepted = {answers} if isinstance(answers, str) else set(answers)
        rank = next((i for i, c in enumerate(candidates, start=1) if c in accepted), None)
        if rank is None:
            continue
        strict += rank == 1
        lenient += 1
        reciprocal += 1.0 / rank
    n = float(len(gold))
    return MetricReport(
        kind=MetricKind.RANKING,
        strict_acc=strict / n,
        lenient_acc=lenient / n,
        mrr=reciprocal / n,
        count=len(gold),
    )
