"""Synthetic corpora with planted annotator perspectives.

Two annotator groups look at the same short texts.  Group A calls an item
positive when it contains the marker token ``xylo``; group B when it contains
``yarrow``.  Each annotation is flipped independently with probability
``noise``.  Annotator ids interleave the groups (``ann01`` is in A, ``ann02`` in
B, ...) so that a correct partition search cannot succeed by id order alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import write_text
from .corpus import AnnotationMatrix, Annotator, CorpusItem, LabelScheme, write_texts
from .partition import Partition

__all__ = ["PlantedCorpus", "planted_corpus", "write_planted_fixture", "MARKER_A", "MARKER_B"]

MARKER_A = "xylo"
MARKER_B = "yarrow"

_FILLER = (
    "the people vote today about borders and jobs in the city while news reports "
    "say debate continues on money trade europe rules market leave remain workers "
    "families streets police council election campaign media report week morning "
    "night politics future country government minister promise crowd protest"
).split()
_EXTRAS = ("#brexit", "#eu", "@someone", "https://t.co/abc", "!!", "#vote")


@dataclass(frozen=True)
class PlantedCorpus:
    matrix: AnnotationMatrix
    items: tuple[CorpusItem, ...]
    planted: Partition
    has_a: frozenset[str]
    has_b: frozenset[str]

    @property
    def texts(self) -> dict[str, str]:
        return {it.item_id: it.text for it in self.items}


def planted_corpus(
    n_items: int = 600,
    seed: int = 0,
    noise: float = 0.02,
    group_size: int = 3,
    mix: tuple[float, float, float, float] = (0.25, 0.25, 0.1, 0.4),
) -> PlantedCorpus:
    """Generate texts and annotations with two planted perspectives.

    ``mix`` gives the share of items containing only the A marker, only the B
    marker, both, and neither.
    """
    rng = np.random.default_rng(seed)
    ids = [f"ann{j + 1:02d}" for j in range(2 * group_size)]
    group_a, group_b = ids[0::2], ids[1::2]
    annotators = [Annotator(a, "A" if a in group_a else "B") for a in ids]

    kinds = rng.choice(4, size=n_items, p=np.asarray(mix) / np.sum(mix))
    items, records, has_a, has_b = [], [], set(), set()
    width = len(str(n_items))
    for n, kind in enumerate(kinds):
        item_id = f"t{n:0{width}d}"
        words = list(rng.choice(_FILLER, size=int(rng.integers(5, 11))))
        markers = {0: [MARKER_A], 1: [MARKER_B], 2: [MARKER_A, MARKER_B], 3: []}[int(kind)]
        for m in markers:
            words.insert(int(rng.integers(0, len(words) + 1)), m)
        if rng.random() < 0.3:
            words.append(str(rng.choice(_EXTRAS)))
        text = " ".join(words)
        items.append(CorpusItem(item_id, text))
        if MARKER_A in markers:
            has_a.add(item_id)
        if MARKER_B in markers:
            has_b.add(item_id)
        flips = rng.random(len(ids)) < noise
        for a, flip in zip(ids, flips):
            truth = item_id in (has_a if a in group_a else has_b)
            records.append((item_id, a, "1" if truth != flip else "0"))

    matrix = AnnotationMatrix.from_records(
        records, LabelScheme(), annotators, {it.item_id: it.text for it in items}
    )
    planted = Partition((tuple(group_a), tuple(group_b)), ("A", "B"))
    return PlantedCorpus(matrix, tuple(items), planted, frozenset(has_a), frozenset(has_b))


def write_planted_fixture(
    directory: str | Path,
    n_items: int = 600,
    seed: int = 0,
    noise: float = 0.02,
    partition_mode: str = "search",
    **config_overrides,
) -> Path:
    """Write annotations, texts, annotator tags and a pipeline config; return the config path."""
    directory = Path(directory)
    corpus = planted_corpus(n_items, seed, noise)
    write_text(directory / "annotations.csv", corpus.matrix.to_long_csv())
    write_text(directory / "texts.jsonl", write_texts(corpus.items))
    rows = ["annotator_id,group,expert"]
    rows += [f"{a.annotator_id},{a.group},0" for a in corpus.matrix.annotators]
    write_text(directory / "annotators.csv", "\n".join(rows) + "\n")
    config = {
        "annotations": "annotations.csv",
        "texts": "texts.jsonl",
        "annotators": "annotators.csv",
        "partition_mode": partition_mode,
        "min_size": 2,
        "split": {"train_fraction": 0.85, "seed": seed, "stratified": True},
        "output_dir": "out",
    }
    config.update(config_overrides)
    path = directory / "config.json"
    write_text(path, json.dumps(config, indent=2, sort_keys=True) + "\n")
    return path
