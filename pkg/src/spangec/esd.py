"""Erroneous-span detector: a hashed averaged-perceptron token tagger.

The tagger scores each token with window features hashed into 2^20 buckets,
squashes the margin through a temperature-calibrated logistic to get an
error probability, and turns thresholded probabilities into spans. Besides
identity/affix/shape features it uses corpus-frequency bins of the token and
its adjacent bigrams (counted over the training sources and stored with the
model), which is what lets a linear model flag novel token juxtapositions it
has never seen verbatim. It is a deliberately small, deterministic stand-in
for a fine-tuned encoder: the estimator interface (fit / predict_probs /
get_params) is the seam where a stronger model plugs in.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass
from typing import Sequence
from zlib import crc32

import numpy as np

from .alignment import EditSpan
from .datagen import EsdInstance
from .errors import EmptyCorpusError, ModelFormatError

N_BUCKETS = 1 << 20
_BUCKET_MASK = N_BUCKETS - 1
# Fixed multiply-shift constant (odd, 64-bit golden-ratio derived).
_MIX = 0x9E3779B97F4A7C15
TEMPLATE_VERSION = 1
_MAGIC = b"ESD1"
_TEMPERATURE_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
_PAD = "<pad>"
_SEP = "\x1f"

# Count-bin edges for frequency features: 0, 1-2, 3-8, 9+.
_BIN_EDGES = (0, 2, 8)


def _bucket(feature: str) -> int:
    h = crc32(feature.encode("utf-8"))
    return ((h * _MIX) >> 44) & _BUCKET_MASK


def _count_bin(count: int) -> int:
    for b, edge in enumerate(_BIN_EDGES):
        if count <= edge:
            return b
    return len(_BIN_EDGES)


def token_shape(tok: str) -> str:
    """Compressed character-class signature, e.g. 'Word12' -> 'Xxd'."""
    shape = []
    for ch in tok:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = "o"
        if not shape or shape[-1] != c:
            shape.append(c)
    return "".join(shape)


def _unigram_key(tok: str) -> int:
    return _bucket("u=" + tok)


def _bigram_key(left: str, right: str) -> int:
    return _bucket("b=" + left + _SEP + right)


# Frequency-bin feature buckets are a small closed set; precompute them.
_UF_BINS = tuple(_bucket(f"uf={b}") for b in range(len(_BIN_EDGES) + 1))
_BFL_BINS = tuple(_bucket(f"bfl={b}") for b in range(len(_BIN_EDGES) + 1))
_BFR_BINS = tuple(_bucket(f"bfr={b}") for b in range(len(_BIN_EDGES) + 1))
_BFLR_BINS = tuple(
    tuple(_bucket(f"bflr={bl},{br}") for br in range(len(_BIN_EDGES) + 1))
    for bl in range(len(_BIN_EDGES) + 1)
)


def token_features(tokens: Sequence[str], i: int) -> list[str]:
    """Count-independent features for token i: identity, casing, affixes,
    shape, and the adjacent bigrams. Context enters only through bigrams
    (identity here, frequency bins in the tagger): raw neighbour-identity
    features measurably hurt generalisation by memorising training noise."""
    tok = tokens[i]
    prev1 = tokens[i - 1] if i >= 1 else _PAD
    next1 = tokens[i + 1] if i + 1 < len(tokens) else _PAD
    return [
        "b=",
        "w=" + tok,
        "lw=" + tok.lower(),
        "sh=" + token_shape(tok),
        "p1=" + tok[:1],
        "p2=" + tok[:2],
        "p3=" + tok[:3],
        "s1=" + tok[-1:],
        "s2=" + tok[-2:],
        "s3=" + tok[-3:],
        "bg-=" + prev1 + _SEP + tok,
        "bg+=" + tok + _SEP + next1,
    ]


class EsdTagger:
    """Binary token tagger with averaged-perceptron training.

    Parameters are plain constructor arguments; fit() consumes EsdInstance
    objects and freezes the model. Trained taggers are immutable and safe to
    query from multiple threads.
    """

    def __init__(self, epochs: int = 5, seed: int = 0):
        self.epochs = epochs
        self.seed = seed
        self.weights: np.ndarray | None = None
        self.temperature: float = 1.0
        self._unigram_counts = np.zeros(N_BUCKETS, dtype=np.uint32)
        self._bigram_counts = np.zeros(N_BUCKETS, dtype=np.uint32)

    def get_params(self) -> dict:
        return {"epochs": self.epochs, "seed": self.seed}

    def set_params(self, **params) -> "EsdTagger":
        for key, value in params.items():
            if key not in ("epochs", "seed"):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _feature_ids(self, tokens: Sequence[str]) -> list[np.ndarray]:
        ids: list[np.ndarray] = []
        n = len(tokens)
        for i in range(n):
            feats = [_bucket(f) for f in token_features(tokens, i)]
            uf = _count_bin(int(self._unigram_counts[_unigram_key(tokens[i])]))
            feats.append(_UF_BINS[uf])
            left = tokens[i - 1] if i >= 1 else _PAD
            right = tokens[i + 1] if i + 1 < n else _PAD
            bl = _count_bin(int(self._bigram_counts[_bigram_key(left, tokens[i])]))
            br = _count_bin(int(self._bigram_counts[_bigram_key(tokens[i], right)]))
            feats.append(_BFL_BINS[bl])
            feats.append(_BFR_BINS[br])
            feats.append(_BFLR_BINS[bl][br])
            ids.append(np.array(feats, dtype=np.int64))
        return ids

    def _count_corpus(self, instances: Sequence[EsdInstance]) -> None:
        for inst in instances:
            toks = inst.tokens
            prev = _PAD
            for tok in toks:
                self._unigram_counts[_unigram_key(tok)] += 1
                self._bigram_counts[_bigram_key(prev, tok)] += 1
                prev = tok
            if toks:
                self._bigram_counts[_bigram_key(prev, _PAD)] += 1

    def fit(self, instances: Sequence[EsdInstance]) -> "EsdTagger":
        if not instances:
            raise EmptyCorpusError("no training instances")
        n_cal = len(instances) // 10 if len(instances) >= 10 else 0
        train = list(instances[: len(instances) - n_cal]) if n_cal else list(instances)
        calib = list(instances[len(instances) - n_cal :]) if n_cal else list(instances)

        self._unigram_counts = np.zeros(N_BUCKETS, dtype=np.uint32)
        self._bigram_counts = np.zeros(N_BUCKETS, dtype=np.uint32)
        self._count_corpus(train)

        feats = [self._feature_ids(inst.tokens) for inst in train]
        labels = [inst.tags for inst in train]

        w = np.zeros(N_BUCKETS, dtype=np.float64)
        u = np.zeros(N_BUCKETS, dtype=np.float64)
        c = 1
        rng = random.Random(self.seed)
        order = list(range(len(train)))
        for _ in range(self.epochs):
            rng.shuffle(order)
            for idx in order:
                for ids, tag in zip(feats[idx], labels[idx]):
                    score = w[ids].sum()
                    pred = 1 if score >= 0 else 0
                    if pred != tag:
                        y = 1.0 if tag == 1 else -1.0
                        np.add.at(w, ids, y)
                        np.add.at(u, ids, c * y)
                    c += 1
        self.weights = w - u / c
        self.temperature = self._fit_temperature(calib)
        return self

    def _fit_temperature(self, instances: Sequence[EsdInstance]) -> float:
        margins: list[float] = []
        tags: list[int] = []
        for inst in instances:
            margins.extend(self.decision_margins(inst.tokens))
            tags.extend(inst.tags)
        best_t, best_nll = 1.0, math.inf
        for t in _TEMPERATURE_GRID:
            nll = 0.0
            for m, tag in zip(margins, tags):
                p = _sigmoid(m / t)
                p = min(max(p, 1e-12), 1 - 1e-12)
                nll -= math.log(p) if tag == 1 else math.log(1 - p)
            if nll < best_nll:
                best_t, best_nll = t, nll
        return best_t

    def decision_margins(self, tokens: Sequence[str]) -> list[float]:
        if self.weights is None:
            raise ModelFormatError("tagger is not trained")
        return [float(self.weights[ids].sum()) for ids in self._feature_ids(tokens)]

    def predict_probs(self, tokens: Sequence[str]) -> list[float]:
        """Per-token error probabilities in [0, 1]."""
        return [_sigmoid(m / self.temperature) for m in self.decision_margins(tokens)]

    def save(self, path: str) -> None:
        """Versioned binary format: magic, template version, bucket count,
        training metadata, temperature, then three sparse little-endian
        sections (weights, unigram counts, bigram counts)."""
        if self.weights is None:
            raise ModelFormatError("tagger is not trained")
        w_idx = np.nonzero(self.weights)[0]
        u_idx = np.nonzero(self._unigram_counts)[0]
        b_idx = np.nonzero(self._bigram_counts)[0]
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(
                struct.pack(
                    "<IIIqdQQQ",
                    TEMPLATE_VERSION,
                    N_BUCKETS,
                    self.epochs,
                    self.seed,
                    self.temperature,
                    len(w_idx),
                    len(u_idx),
                    len(b_idx),
                )
            )
            for idx in w_idx:
                fh.write(struct.pack("<Id", int(idx), float(self.weights[idx])))
            for idx in u_idx:
                fh.write(struct.pack("<II", int(idx), int(self._unigram_counts[idx])))
            for idx in b_idx:
                fh.write(struct.pack("<II", int(idx), int(self._bigram_counts[idx])))

    @classmethod
    def load(cls, path: str) -> "EsdTagger":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise ModelFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
            header = fh.read(struct.calcsize("<IIIqdQQQ"))
            if len(header) != struct.calcsize("<IIIqdQQQ"):
                raise ModelFormatError("truncated model header")
            version, buckets, epochs, seed, temperature, n_w, n_u, n_b = struct.unpack(
                "<IIIqdQQQ", header
            )
            if version != TEMPLATE_VERSION:
                raise ModelFormatError(f"unsupported template version {version}")
            if buckets != N_BUCKETS:
                raise ModelFormatError(f"unsupported bucket count {buckets}")
            model = cls(epochs=epochs, seed=seed)
            model.temperature = temperature
            weights = np.zeros(N_BUCKETS, dtype=np.float64)
            rec_w = struct.Struct("<Id")
            for _ in range(n_w):
                idx, value = rec_w.unpack(fh.read(rec_w.size))
                weights[idx] = value
            rec_c = struct.Struct("<II")
            for _ in range(n_u):
                idx, count = rec_c.unpack(fh.read(rec_c.size))
                model._unigram_counts[idx] = count
            for _ in range(n_b):
                idx, count = rec_c.unpack(fh.read(rec_c.size))
                model._bigram_counts[idx] = count
            model.weights = weights
        return model


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def train_tagger(
    instances: Sequence[EsdInstance], epochs: int = 5, seed: int = 0
) -> EsdTagger:
    return EsdTagger(epochs=epochs, seed=seed).fit(instances)


@dataclass(frozen=True)
class DecodeConfig:
    """Probability cutoff and run-merging gap for span decoding."""

    threshold: float = 0.5
    merge_gap: int = 0

    def __post_init__(self):
        if not (0 <= self.threshold <= 1):
            raise ValueError("threshold must be in [0, 1]")
        if self.merge_gap < 0:
            raise ValueError("merge_gap must be non-negative")


def decode_spans(probs: Sequence[float], cfg: DecodeConfig) -> list[EditSpan]:
    """Maximal runs of tokens with prob >= threshold become spans; runs
    separated by at most merge_gap tokens fuse. No spans means error-free."""
    spans: list[EditSpan] = []
    start = None
    for i, p in enumerate(probs):
        if p >= cfg.threshold:
            if start is None:
                start = i
        elif start is not None:
            spans.append(EditSpan(start, i))
            start = None
    if start is not None:
        spans.append(EditSpan(start, len(probs)))
    if cfg.merge_gap > 0 and len(spans) > 1:
        fused = [spans[0]]
        for span in spans[1:]:
            if span.src_start - fused[-1].src_end <= cfg.merge_gap:
                fused[-1] = EditSpan(fused[-1].src_start, span.src_end)
            else:
                fused.append(span)
        spans = fused
    return spans
