"""Seeded synthetic corpora with gold entity annotations."""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from pathlib import Path
from typing import TypeVar

import numpy as np
from sklearn.model_selection import train_test_split

from distillkit.corpus.loaders import write_conll
from distillkit.corpus.models import LabeledSequence, SynthCorpus, SynthSpec

logger = logging.getLogger(__name__)

T = TypeVar("T")

HELDOUT_SEED = 42

_SLOT = re.compile(r"^\{(\w+)\}$")


_BIOMEDICAL = {
    "entities": {
        "Disease": [
            "diabetes", "asthma", "breast cancer", "hepatitis", "lung fibrosis",
            "migraine", "anemia", "psoriasis", "renal failure", "lupus",
        ],
        "Chemical": [
            "aspirin", "insulin", "cisplatin", "metformin", "ibuprofen",
            "heparin", "tamoxifen", "lithium", "nitric oxide", "retinoic acid",
        ],
        "Gene": ["brca1", "tp53", "egfr", "kras", "il6", "apoe", "myc", "pten", "tnf", "vegf"],
    },
    "fillers": {
        "Verb": ["reduces", "improves", "worsens", "prevents", "triggers"],
        "Cohort": ["patients", "mice", "subjects", "children", "adults"],
        "Assay": ["expression", "activity", "levels", "signaling"],
    },
    "templates": [
        "{Chemical} {Verb} {Disease} in {Cohort} .",
        "mutations in {Gene} are linked to {Disease} .",
        "{Cohort} with {Disease} received {Chemical} daily .",
        "{Gene} {Assay} was elevated in {Cohort} with {Disease} .",
        "treatment with {Chemical} lowers {Gene} {Assay} .",
        "the risk of {Disease} rises when {Gene} is silenced .",
        "{Chemical} and {Chemical} were compared in {Cohort} .",
        "loss of {Gene} {Verb} {Disease} progression .",
    ],
}

_CLINICAL = {
    "entities": {
        "Disease": [
            "hypertension", "pneumonia", "sepsis", "stroke", "gout",
            "bronchitis", "arrhythmia", "cellulitis", "heart failure", "kidney stones",
        ],
        "Chemical": [
            "amoxicillin", "lisinopril", "warfarin", "prednisone", "morphine",
            "furosemide", "vancomycin", "atorvastatin", "normal saline", "potassium chloride",
        ],
        "Gene": ["cyp2d6", "hla", "vkorc1", "g6pd", "tpmt", "slco1b1"],
    },
    "fillers": {
        "Schedule": ["twice daily", "at night", "every morning", "as needed"],
        "Status": ["stable", "improving", "afebrile", "comfortable"],
        "Ward": ["icu", "ward", "clinic", "ed"],
    },
    "templates": [
        "pt admitted to {Ward} with {Disease} , started on {Chemical} {Schedule} .",
        "hx of {Disease} , home meds include {Chemical} .",
        "{Chemical} held due to {Disease} , pt {Status} .",
        "genotype {Gene} noted before dosing {Chemical} .",
        "plan : continue {Chemical} {Schedule} for {Disease} .",
        "discharged from {Ward} , {Status} , follow up for {Disease} .",
    ],
}

DOMAINS = {"biomedical": _BIOMEDICAL, "clinical": _CLINICAL}


def default_synth_spec(domain: str = "biomedical", num_sentences: int = 1000) -> SynthSpec:
    """Built-in grammar for ``domain`` ("biomedical" or the shifted "clinical")."""
    if domain not in DOMAINS:
        raise ValueError(f"unknown synthetic domain {domain!r}; choose from {sorted(DOMAINS)}")
    grammar = DOMAINS[domain]
    return SynthSpec.model_validate({"domain": domain, "num_sentences": num_sentences, **grammar})


def bio_label_set(entity_types: Sequence[str]) -> list[str]:
    """``O`` plus ``B-``/``I-`` for every type: 2k+1 labels."""
    labels = ["O"]
    for entity in sorted(entity_types):
        labels.extend([f"B-{entity}", f"I-{entity}"])
    return labels


def _render(template: str, spec: SynthSpec, rng: np.random.Generator) -> LabeledSequence:
    words: list[str] = []
    labels: list[str] = []
    for token in template.split():
        slot = _SLOT.match(token)
        if slot is None:
            words.append(token)
            labels.append("O")
            continue
        name = slot.group(1)
        if name in spec.entities:
            surface = spec.entities[name][int(rng.integers(len(spec.entities[name])))].split()
            words.extend(surface)
            labels.extend([f"B-{name}"] + [f"I-{name}"] * (len(surface) - 1))
        elif name in spec.fillers:
            filler = spec.fillers[name][int(rng.integers(len(spec.fillers[name])))].split()
            words.extend(filler)
            labels.extend(["O"] * len(filler))
        else:
            raise ValueError(f"template slot {{{name}}} is neither an entity type nor a filler")
    return LabeledSequence(tuple(words), tuple(labels))


def train_heldout_split(
    items: Sequence[T], fraction: float, seed: int = HELDOUT_SEED
) -> tuple[list[T], list[T]]:
    """Seeded random split; ``fraction`` of the items are held out."""
    if fraction <= 0.0 or len(items) < 2:
        return list(items), []
    train, heldout = train_test_split(list(items), test_size=fraction, random_state=seed, shuffle=True)
    return list(train), list(heldout)


def synth_corpus(spec: SynthSpec, rng_seed: int = 0) -> SynthCorpus:
    """Generate ``spec.num_sentences`` sentences and split off the held-out share.

    ``rng_seed`` drives generation only; the split always uses ``HELDOUT_SEED``.
    """
    if not spec.templates:
        raise ValueError("SynthSpec has no templates")
    for name, forms in {**spec.entities, **spec.fillers}.items():
        if not forms:
            raise ValueError(f"slot {{{name}}} has no surface forms")
    rng = np.random.default_rng(rng_seed)
    sentences = [
        _render(spec.templates[int(rng.integers(len(spec.templates)))], spec, rng)
        for _ in range(spec.num_sentences)
    ]
    train, heldout = train_heldout_split(sentences, spec.heldout_fraction, seed=HELDOUT_SEED)
    corpus = SynthCorpus(
        train=train,
        heldout=heldout,
        label_set=bio_label_set(list(spec.entities)),
        domain=spec.domain,
        metadata={"seed": rng_seed, "num_sentences": spec.num_sentences},
    )
    logger.info(
        f"Synthesised {spec.domain} corpus: {len(train)} train / {len(heldout)} held-out sentences, "
        f"{len(corpus.label_set)} labels"
    )
    return corpus


def relation_pairs(sentences: Sequence[LabeledSequence]) -> list[LabeledSequence]:
    """Binary sequence labels: "1" when a sentence mentions a chemical and a disease."""
    pairs = []
    for seq in sentences:
        tags = set(seq.labels or ())
        related = "B-Chemical" in tags and "B-Disease" in tags
        pairs.append(LabeledSequence(seq.words, label="1" if related else "0"))
    return pairs


def write_synth_corpus(corpus: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Emit UTF-8 plain text plus CoNLL annotations for both splits."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for split, sentences in (("train", corpus.train), ("heldout", corpus.heldout)):
        text_path = out / f"{split}.txt"
        text_path.write_text(
            "".join(seq.text + "\n" for seq in sentences), encoding="utf-8", newline="\n"
        )
        paths[f"{split}_text"] = text_path
        paths[f"{split}_conll"] = write_conll(sentences, out / f"{split}.conll")
    return paths
