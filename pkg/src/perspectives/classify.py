"""Reference text classifier and prediction files.

A deliberately small, deterministic model: unigram tokens, smoothed TF-IDF with
L2-normalized rows, and L2-regularized logistic regression fitted by full-batch
gradient descent from a zero start.  Predictions of any other model (e.g. a
fine-tuned transformer) enter through :func:`import_predictions`.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .augment import AugmentedSet
from .corpus import AnnotationError, LabelScheme

__all__ = [
    "tokenize",
    "Tfidf",
    "fit_tfidf",
    "Hyperparams",
    "LinearModel",
    "train_linear",
    "predict",
    "PredictionSet",
    "import_predictions",
    "logistic_loss",
]

_URL = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_ALNUM = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase unigrams; URLs and @mentions dropped, ``#`` stripped from hashtags.

    >>> tokenize("Deport them NOW http://t.co/x")
    ['deport', 'them', 'now']
    >>> tokenize("@user #Brexit!!")
    ['brexit']
    """
    text = _URL.sub(" ", text.lower())
    text = _MENTION.sub(" ", text).replace("#", "")
    return _ALNUM.findall(text)


# -- TF-IDF -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Tfidf:
    vocabulary: Mapping[str, int]
    idf: np.ndarray

    def transform(self, docs: Iterable[Sequence[str]]) -> np.ndarray:
        """Rows of raw term counts times idf, scaled to unit L2 norm.

        Out-of-vocabulary tokens are ignored; a document with no known token
        maps to the zero vector.
        """
        docs = list(docs)
        X = np.zeros((len(docs), len(self.vocabulary)))
        for r, doc in enumerate(docs):
            for tok in doc:
                j = self.vocabulary.get(tok)
                if j is not None:
                    X[r, j] += 1.0
        X *= self.idf
        norms = np.sqrt((X * X).sum(axis=1, keepdims=True))
        np.divide(X, norms, out=X, where=norms > 0)
        return X


def fit_tfidf(docs: Iterable[Sequence[str]]) -> Tfidf:
    """Vocabulary (sorted) and smoothed idf ``ln((1 + D) / (1 + df)) + 1``."""
    docs = list(docs)
    df: dict[str, int] = {}
    for doc in docs:
        for tok in set(doc):
            df[tok] = df.get(tok, 0) + 1
    if not df:
        raise ValueError("cannot fit TF-IDF: every document is empty")
    vocab = {tok: j for j, tok in enumerate(sorted(df))}
    d = len(docs)
    idf = np.array([np.log((1 + d) / (1 + df[t])) + 1.0 for t in vocab])
    return Tfidf(vocab, idf)


# -- logistic model ---------------------------------------------------------


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 1.0
    epochs: int = 500
    l2: float = 1e-4


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray, float]:
    """Mean log-loss plus ``l2 / 2 * ||w||^2`` (bias unpenalized), with its gradient."""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = _sigmoid(z) - y
    grad_w = X.T @ r / len(y) + l2 * w
    grad_b = float(r.mean())
    return loss, grad_w, grad_b


@dataclass(frozen=True, eq=False)
class LinearModel:
    tfidf: Tfidf
    weights: np.ndarray
    bias: float
    positive: str
    negative: str
    hyperparams: Hyperparams = Hyperparams()
    seed: int = 0
    loss_history: tuple[float, ...] = field(default=(), repr=False)

    def decision(self, docs: Iterable[Sequence[str]]) -> np.ndarray:
        return _sigmoid(self.tfidf.transform(docs) @ self.weights + self.bias)

    def to_json(self) -> str:
        vocab = sorted(self.tfidf.vocabulary, key=self.tfidf.vocabulary.get)
        doc = {
            "format": "perspectives-linear/1",
            "vocabulary": vocab,
            "idf": [float(x) for x in self.tfidf.idf],
            "weights": [float(x) for x in self.weights],
            "bias": float(self.bias),
            "labels": {"positive": self.positive, "negative": self.negative},
            "hyperparams": vars(self.hyperparams),
            "seed": self.seed,
            "final_loss": self.loss_history[-1] if self.loss_history else None,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        doc = json.loads(text)
        vocab = {t: j for j, t in enumerate(doc["vocabulary"])}
        return cls(
            Tfidf(vocab, np.array(doc["idf"], dtype=float)),
            np.array(doc["weights"], dtype=float),
            float(doc["bias"]),
            doc["labels"]["positive"],
            doc["labels"]["negative"],
            Hyperparams(**doc["hyperparams"]),
            int(doc["seed"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _training_rows(train) -> list[tuple[str, str]]:
    if isinstance(train, AugmentedSet):
        return [(i, train.labels[i]) for i in train.items]
    return list(train.labels.items())


def train_linear(
    train,
    texts: Mapping[str, str],
    hyperparams: Hyperparams = Hyperparams(),
    seed: int = 0,
    scheme: LabelScheme | None = None,
) -> LinearModel:
    """Fit the reference model on ``train`` (a gold standard or augmented set).

    Gradient descent is full-batch with a fixed step and epoch count starting
    from zero weights, so the result is a pure function of the data; ``seed``
    is recorded but does not influence fitting.
    """
    if scheme is None:
        scheme = train.gold.scheme if isinstance(train, AugmentedSet) else train.scheme
    rows = _training_rows(train)
    missing = [i for i, _ in rows if i not in texts]
    if missing:
        raise KeyError(f"no text for training items {sorted(set(missing))[:5]}")
    y = np.array([1.0 if lbl == scheme.positive else 0.0 for _, lbl in rows])
    if len(rows) == 0 or y.min() == y.max():
        raise ValueError("training data must contain both the positive and a negative class")
    docs = [tokenize(texts[i]) for i, _ in rows]
    tfidf = fit_tfidf(docs)
    X = tfidf.transform(docs)

    w = np.zeros(X.shape[1])
    b = 0.0
    lr = hyperparams.learning_rate
    history = []
    for _ in range(hyperparams.epochs):
        loss, gw, gb = logistic_loss(w, b, X, y, hyperparams.l2)
        history.append(loss)
        w = w - lr * gw
        b = b - lr * gb
    history.append(logistic_loss(w, b, X, y, hyperparams.l2)[0])
    return LinearModel(tfidf, w, b, scheme.positive, scheme.negative, hyperparams, seed, tuple(history))


# -- predictions ------------------------------------------------------------


@dataclass(frozen=True)
class PredictionSet:
    predictions: Mapping[str, str]
    scores: Mapping[str, float] | None = None
    source: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "predictions", dict(sorted(self.predictions.items())))
        if self.scores is not None:
            object.__setattr__(self, "scores", dict(sorted(self.scores.items())))

    def __len__(self):
        return len(self.predictions)

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(self.predictions)

    def positives(self, positive: str) -> set[str]:
        return {i for i, v in self.predictions.items() if v == positive}

    def restrict(self, item_ids: Iterable[str]) -> "PredictionSet":
        keep = set(item_ids)
        scores = None if self.scores is None else {i: s for i, s in self.scores.items() if i in keep}
        return PredictionSet({i: v for i, v in self.predictions.items() if i in keep}, scores, self.source)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item_id", "label"] + (["score"] if self.scores is not None else []))
        for item, label in self.predictions.items():
            extra = [repr(float(self.scores[item]))] if self.scores is not None else []
            w.writerow([item, label] + extra)
        return buf.getvalue()


def predict(model: LinearModel, texts: Mapping[str, str], source: str = "reference") -> PredictionSet:
    """Positive iff the sigmoid score is at least 0.5."""
    ids = sorted(texts)
    scores = model.decision(tokenize(texts[i]) for i in ids) if ids else np.zeros(0)
    preds = {i: model.positive if s >= 0.5 else model.negative for i, s in zip(ids, scores)}
    return PredictionSet(preds, {i: float(s) for i, s in zip(ids, scores)}, source)


def import_predictions(path: str | Path, scheme: LabelScheme = LabelScheme(), gold=None) -> PredictionSet:
    """Read ``item_id,label[,score]`` predictions produced by any external model.

    With ``gold`` given, ids absent from it are collected in ``warnings`` (not
    an error).  The source name is the file stem.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or [h.strip() for h in header[:2]] != ["item_id", "label"]:
        raise AnnotationError("line 1: expected header item_id,label[,score]")
    has_score = len(header) > 2 and header[2].strip() == "score"
    preds, scores = {}, {}
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        item, label = row[0].strip(), row[1].strip() if len(row) > 1 else ""
        if label not in scheme.categories:
            raise AnnotationError(f"line {line}: label {label!r} not in scheme {scheme.categories}")
        if item in preds:
            raise AnnotationError(f"line {line}: duplicate item {item!r}")
        preds[item] = label
        if has_score:
            try:
                scores[item] = float(row[2])
            except (IndexError, ValueError):
                raise AnnotationError(f"line {line}: bad score") from None
    warnings = ()
    if gold is not None:
        unknown = sorted(set(preds) - set(gold.labels))
        warnings = tuple(f"unknown item id {i!r}" for i in unknown)
    return PredictionSet(preds, scores if has_score else None, path.stem, warnings)
