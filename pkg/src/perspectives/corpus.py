"""Corpus items, label schemes and the items x annotators annotation matrix.

All file parsing lives here. Two annotation layouts are supported:

* ``long-csv``: header ``item_id,annotator_id,label``, one annotation per row.
* ``wide-tsv``: header ``item_id<TAB>text<TAB><annotator_id>...``, one item per
  row, an empty cell meaning the annotator did not label the item.

Texts travel separately as JSON lines (``{"id": ..., "text": ..., "meta": {...}}``)
unless they come embedded in a wide-tsv file.
"""

from __future__ import annotations

import csv
import io
import json
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MISSING",
    "AnnotationError",
    "CorpusItem",
    "LabelScheme",
    "Annotator",
    "AnnotationMatrix",
    "load_annotations",
    "parse_annotations",
    "load_annotators",
    "load_texts",
    "write_texts",
    "normalize_text",
    "corpus_tokens",
    "deduplicate",
    "keyword_filter",
    "keyword_frequencies",
    "label_distribution",
]

#: Code stored in :attr:`AnnotationMatrix.codes` for an absent annotation.
MISSING = -1


class AnnotationError(ValueError):
    """Malformed annotation input."""


@dataclass(frozen=True)
class CorpusItem:
    item_id: str
    text: str
    meta: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.item_id:
            raise ValueError("item_id must be non-empty")


@dataclass(frozen=True)
class LabelScheme:
    """Ordered category names plus the name of the detection class."""

    categories: tuple[str, ...] = ("0", "1")
    positive: str = "1"

    def __post_init__(self):
        cats = tuple(str(c) for c in self.categories)
        object.__setattr__(self, "categories", cats)
        object.__setattr__(self, "positive", str(self.positive))
        if len(cats) < 2:
            raise ValueError("a label scheme needs at least two categories")
        if len(set(cats)) != len(cats):
            raise ValueError(f"duplicate categories in {cats}")
        if self.positive not in cats:
            raise ValueError(f"positive class {self.positive!r} not in {cats}")

    @property
    def negative(self) -> str:
        """First non-positive category; the fallback class of binary models."""
        return next(c for c in self.categories if c != self.positive)

    @property
    def is_binary(self) -> bool:
        return len(self.categories) == 2

    def index(self, label: str) -> int:
        try:
            return self.categories.index(str(label))
        except ValueError:
            raise AnnotationError(f"label {label!r} not in scheme {self.categories}") from None

    def to_dict(self) -> dict:
        return {"categories": list(self.categories), "positive": self.positive}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LabelScheme":
        return cls(tuple(d.get("categories", ("0", "1"))), d.get("positive", "1"))


@dataclass(frozen=True)
class Annotator:
    annotator_id: str
    group: str | None = None
    expert: bool = False


@dataclass(frozen=True, eq=False)
class AnnotationMatrix:
    """Items x annotators grid of category codes.

    ``codes[i, j]`` is the index into ``scheme.categories`` of annotator ``j``'s
    label for item ``i``, or :data:`MISSING`.  Items and annotators are kept
    sorted by id so that two matrices holding the same annotations compare
    (and serialize) identically whatever order they were read in.
    """

    items: tuple[str, ...]
    annotators: tuple[Annotator, ...]
    codes: np.ndarray
    scheme: LabelScheme = LabelScheme()
    texts: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.int16, copy=True)
        if codes.size == 0:
            codes = codes.reshape(len(self.items), len(self.annotators))
        if codes.shape != (len(self.items), len(self.annotators)):
            raise AnnotationError(
                f"codes shape {codes.shape} does not match "
                f"{len(self.items)} items x {len(self.annotators)} annotators"
            )
        ids = [a.annotator_id for a in self.annotators]
        if len(set(ids)) != len(ids):
            raise AnnotationError("annotator ids must be unique")
        if len(set(self.items)) != len(self.items):
            raise AnnotationError("item ids must be unique")
        if codes.size and (codes.max() >= len(self.scheme.categories) or codes.min() < MISSING):
            raise AnnotationError("category code outside scheme")
        if len(self.items) and not codes.shape[1]:
            raise AnnotationError("matrix has items but no annotators")
        empty = np.flatnonzero((codes == MISSING).all(axis=1)) if codes.size else []
        if len(empty):
            raise AnnotationError(f"item {self.items[empty[0]]!r} has no annotations")

        item_order = sorted(range(len(self.items)), key=lambda i: self.items[i])
        ann_order = sorted(range(len(ids)), key=lambda j: ids[j])
        codes = codes[np.ix_(item_order, ann_order)] if codes.size else codes
        codes.flags.writeable = False
        object.__setattr__(self, "items", tuple(self.items[i] for i in item_order))
        object.__setattr__(self, "annotators", tuple(self.annotators[j] for j in ann_order))
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "_item_index", {it: i for i, it in enumerate(self.items)})
        object.__setattr__(
            self, "_ann_index", {a.annotator_id: j for j, a in enumerate(self.annotators)}
        )

    # -- construction -----------------------------------------------------

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[str, str, str]],
        scheme: LabelScheme = LabelScheme(),
        annotators: Sequence[Annotator] | None = None,
        texts: Mapping[str, str] | None = None,
    ) -> "AnnotationMatrix":
        """Build from ``(item_id, annotator_id, label)`` triples."""
        cells: dict[tuple[str, str], int] = {}
        items: dict[str, None] = {}
        seen_ann: dict[str, None] = {}
        for item, ann, label in records:
            item, ann = str(item), str(ann)
            if (item, ann) in cells:
                raise AnnotationError(f"duplicate annotation for item {item!r} by {ann!r}")
            cells[item, ann] = scheme.index(label)
            items.setdefault(item)
            seen_ann.setdefault(ann)
        meta = {a.annotator_id: a for a in annotators or ()}
        ann_objs = [meta.get(a, Annotator(a)) for a in seen_ann]
        ann_objs += [a for a in meta.values() if a.annotator_id not in seen_ann]
        item_list = list(items)
        iidx = {it: i for i, it in enumerate(item_list)}
        aidx = {a.annotator_id: j for j, a in enumerate(ann_objs)}
        codes = np.full((len(item_list), len(ann_objs)), MISSING, dtype=np.int16)
        for (item, ann), code in cells.items():
            codes[iidx[item], aidx[ann]] = code
        return cls(tuple(item_list), tuple(ann_objs), codes, scheme, dict(texts or {}))

    # -- accessors --------------------------------------------------------

    @property
    def annotator_ids(self) -> tuple[str, ...]:
        return tuple(a.annotator_id for a in self.annotators)

    @property
    def n_categories(self) -> int:
        return len(self.scheme.categories)

    def annotator(self, annotator_id: str) -> Annotator:
        return self.annotators[self.annotator_column(annotator_id)]

    def annotator_column(self, annotator_id: str) -> int:
        try:
            return self._ann_index[annotator_id]
        except KeyError:
            raise KeyError(f"unknown annotator {annotator_id!r}") from None

    def item_row(self, item_id: str) -> int:
        try:
            return self._item_index[item_id]
        except KeyError:
            raise KeyError(f"unknown item {item_id!r}") from None

    def columns(self, annotator_ids: Iterable[str]) -> list[int]:
        return [self.annotator_column(a) for a in annotator_ids]

    def item_labels(self, item_id: str) -> dict[str, str]:
        """Non-missing labels of one item keyed by annotator id."""
        row = self.codes[self.item_row(item_id)]
        return {
            a.annotator_id: self.scheme.categories[c]
            for a, c in zip(self.annotators, row)
            if c != MISSING
        }

    def label(self, item_id: str, annotator_id: str) -> str | None:
        c = self.codes[self.item_row(item_id), self.annotator_column(annotator_id)]
        return None if c == MISSING else self.scheme.categories[c]

    def counts(self, annotator_ids: Iterable[str] | None = None) -> np.ndarray:
        """Per-item category counts, shape ``(n_items, n_categories)``."""
        cols = range(len(self.annotators)) if annotator_ids is None else self.columns(annotator_ids)
        sub = self.codes[:, list(cols)]
        return np.stack([(sub == c).sum(axis=1) for c in range(self.n_categories)], axis=1)

    def groups(self) -> dict[str, list[str]]:
        """Annotator ids by group tag, for annotators that carry one."""
        out: dict[str, list[str]] = {}
        for a in self.annotators:
            if a.group is not None:
                out.setdefault(a.group, []).append(a.annotator_id)
        return out

    def restrict_items(self, item_ids: Iterable[str]) -> "AnnotationMatrix":
        keep = sorted({self.item_row(i) for i in item_ids})
        items = tuple(self.items[i] for i in keep)
        texts = {k: v for k, v in self.texts.items() if k in set(items)}
        return AnnotationMatrix(items, self.annotators, self.codes[keep], self.scheme, texts)

    def with_texts(self, texts: Mapping[str, str]) -> "AnnotationMatrix":
        return AnnotationMatrix(self.items, self.annotators, self.codes, self.scheme, dict(texts))

    def records(self) -> list[tuple[str, str, str]]:
        """Non-missing cells as triples, ordered by item id then annotator id."""
        out = []
        for i, item in enumerate(self.items):
            for j, a in enumerate(self.annotators):
                c = self.codes[i, j]
                if c != MISSING:
                    out.append((item, a.annotator_id, self.scheme.categories[c]))
        return out

    def to_long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item_id", "annotator_id", "label"])
        w.writerows(self.records())
        return buf.getvalue()

    def __eq__(self, other):
        if not isinstance(other, AnnotationMatrix):
            return NotImplemented
        return (
            self.items == other.items
            and self.annotators == other.annotators
            and self.scheme == other.scheme
            and np.array_equal(self.codes, other.codes)
        )

    def __repr__(self):
        n_missing = int((self.codes == MISSING).sum())
        return (
            f"AnnotationMatrix({len(self.items)} items x {len(self.annotators)} annotators, "
            f"{n_missing} missing, categories={self.scheme.categories})"
        )


# -- file formats -----------------------------------------------------------


def parse_annotations(
    text: str,
    format: str = "long-csv",
    scheme: LabelScheme = LabelScheme(),
    annotators: Sequence[Annotator] | None = None,
) -> AnnotationMatrix:
    """Parse annotation file content; see :func:`load_annotations`."""
    if format == "long-csv":
        return _parse_long_csv(text, scheme, annotators)
    if format == "wide-tsv":
        return _parse_wide_tsv(text, scheme, annotators)
    raise ValueError(f"unknown annotation format {format!r}")


def load_annotations(
    path: str | Path,
    format: str = "long-csv",
    scheme: LabelScheme = LabelScheme(),
    annotators: Sequence[Annotator] | None = None,
) -> AnnotationMatrix:
    """Read an annotation file into an :class:`AnnotationMatrix`.

    Errors carry the 1-based line number of the offending row.  Labels outside
    ``scheme`` and repeated (item, annotator) pairs are rejected.
    """
    text = Path(path).read_text(encoding="utf-8")
    return parse_annotations(text, format, scheme, annotators)


def _parse_long_csv(text, scheme, annotators):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:3]] != ["item_id", "annotator_id", "label"]:
        raise AnnotationError("line 1: expected header item_id,annotator_id,label")
    records = []
    seen = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise AnnotationError(f"line {line}: expected 3 fields, got {len(row)}")
        item, ann, label = (c.strip() for c in row)
        if not item or not ann:
            raise AnnotationError(f"line {line}: empty item_id or annotator_id")
        if label not in scheme.categories:
            raise AnnotationError(f"line {line}: label {label!r} not in scheme {scheme.categories}")
        if (item, ann) in seen:
            raise AnnotationError(f"line {line}: duplicate annotation for item {item!r} by {ann!r}")
        seen.add((item, ann))
        records.append((item, ann, label))
    if not records:
        raise AnnotationError("no annotations")
    return AnnotationMatrix.from_records(records, scheme, annotators)


def _parse_wide_tsv(text, scheme, annotators):
    lines = text.splitlines()
    if not lines:
        raise AnnotationError("no annotations")
    header = lines[0].split("\t")
    if header[:2] != ["item_id", "text"] or len(header) < 3:
        raise AnnotationError("line 1: expected header item_id<TAB>text<TAB><annotator_id>...")
    ann_ids = [h.strip() for h in header[2:]]
    if len(set(ann_ids)) != len(ann_ids) or not all(ann_ids):
        raise AnnotationError("line 1: annotator ids must be unique and non-empty")
    meta = {a.annotator_id: a for a in annotators or ()}
    ann_objs = tuple(meta.get(a, Annotator(a)) for a in ann_ids)
    items, texts, rows = [], {}, []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise AnnotationError(f"line {line_no}: expected {len(header)} fields, got {len(cells)}")
        item = cells[0].strip()
        if not item:
            raise AnnotationError(f"line {line_no}: empty item_id")
        if item in texts:
            raise AnnotationError(f"line {line_no}: duplicate item {item!r}")
        row = []
        for cell in cells[2:]:
            cell = cell.strip()
            if not cell:
                row.append(MISSING)
            elif cell in scheme.categories:
                row.append(scheme.categories.index(cell))
            else:
                raise AnnotationError(
                    f"line {line_no}: label {cell!r} not in scheme {scheme.categories}"
                )
        if all(c == MISSING for c in row):
            raise AnnotationError(f"line {line_no}: item {item!r} has no annotations")
        items.append(item)
        texts[item] = cells[1]
        rows.append(row)
    if not items:
        raise AnnotationError("no annotations")
    return AnnotationMatrix(tuple(items), ann_objs, np.array(rows), scheme, texts)


def load_annotators(path: str | Path) -> list[Annotator]:
    """Read annotator metadata: CSV header ``annotator_id,group[,expert]``.

    ``expert`` accepts 1/0, true/false, yes/no; an empty group means untagged.
    """
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "annotator_id" not in reader.fieldnames:
            raise AnnotationError("line 1: annotator file needs an annotator_id column")
        for row in reader:
            aid = (row.get("annotator_id") or "").strip()
            if not aid:
                raise AnnotationError(f"line {reader.line_num}: empty annotator_id")
            group = (row.get("group") or "").strip() or None
            expert = (row.get("expert") or "").strip().lower() in {"1", "true", "yes", "y"}
            out.append(Annotator(aid, group, expert))
    return out


def load_texts(path: str | Path) -> list[CorpusItem]:
    """Read a JSON-lines text file into corpus items, in file order."""
    items = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                item = CorpusItem(str(obj["id"]), str(obj["text"]), dict(obj.get("meta") or {}))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise AnnotationError(f"line {n}: bad text record ({exc})") from None
            if item.item_id in seen:
                raise AnnotationError(f"line {n}: duplicate item id {item.item_id!r}")
            seen.add(item.item_id)
            items.append(item)
    return items


def write_texts(items: Iterable[CorpusItem]) -> str:
    lines = []
    for it in items:
        obj = {"id": it.item_id, "text": it.text}
        if it.meta:
            obj["meta"] = dict(sorted(it.meta.items()))
        lines.append(json.dumps(obj, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


# -- cleaning and filtering -------------------------------------------------

_RT_PREFIX = re.compile(r"^\s*rt\s+@\w+:?\s*", re.IGNORECASE)
_URL = re.compile(r"https?://\S+", re.IGNORECASE)
_WS = re.compile(r"\s+")
_EDGE_PUNCT = string.punctuation.replace("#", "").replace("@", "")


def normalize_text(text: str) -> str:
    """Lowercase, drop a leading ``RT @user:`` marker and URLs, collapse whitespace."""
    text = _RT_PREFIX.sub("", text)
    text = _URL.sub(" ", text)
    return _WS.sub(" ", text.lower()).strip()


def corpus_tokens(text: str) -> list[str]:
    """Whitespace tokens of the normalized text, hashtags and edge punctuation stripped.

    Internal hyphens survive, so ``anti-immigrant`` stays one token.
    """
    out = []
    for tok in normalize_text(text).split(" "):
        tok = tok.strip(_EDGE_PUNCT).lstrip("#").strip(_EDGE_PUNCT)
        if tok:
            out.append(tok)
    return out


def deduplicate(items: Sequence[CorpusItem]) -> list[CorpusItem]:
    """Drop items whose normalized text repeats an earlier item's; order kept."""
    seen = set()
    out = []
    for it in items:
        key = normalize_text(it.text)
        if key in seen:
            continue
        seen.add(key)
        out.append(it)
    return out


def _check_keywords(keywords):
    kws = [k.strip().lower().lstrip("#") for k in keywords]
    if not kws or not all(kws):
        raise ValueError("keywords must be a non-empty list of non-empty strings")
    return kws


def keyword_filter(items: Sequence[CorpusItem], keywords: Sequence[str]) -> list[CorpusItem]:
    """Items containing at least one keyword as a whole token."""
    kws = set(_check_keywords(keywords))
    return [it for it in items if kws.intersection(corpus_tokens(it.text))]


def keyword_frequencies(items: Sequence[CorpusItem], keywords: Sequence[str]) -> dict[str, int]:
    """Token occurrences of each keyword across all items (not item counts).

    The returned dict follows the input keyword order; absent keywords map to 0.
    """
    kws = _check_keywords(keywords)
    total: Counter = Counter()
    for it in items:
        total.update(corpus_tokens(it.text))
    return {k: total[k] for k in kws}


def label_distribution(matrix: AnnotationMatrix, gold=None) -> dict:
    """Per-category counts over gold labels, or over per-item raw majority.

    Without a gold standard each item counts under its modal raw label; ties go
    to the positive class if it is among the tied categories, else to the first
    tied category in scheme order.
    """
    cats = matrix.scheme.categories
    counts = dict.fromkeys(cats, 0)
    if gold is not None:
        unknown = set(gold.labels) - set(matrix.items)
        if unknown:
            raise ValueError(f"gold items not in matrix: {sorted(unknown)[:5]}")
        for label in gold.labels.values():
            counts[label] += 1
    else:
        pos = matrix.scheme.index(matrix.scheme.positive)
        for row in matrix.counts():
            tied = np.flatnonzero(row == row.max())
            counts[cats[pos if pos in tied else tied[0]]] += 1
    return {"counts": counts, "total": sum(counts.values())}
