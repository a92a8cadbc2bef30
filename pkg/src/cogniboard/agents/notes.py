"""Note modality agent.

Sentences are segmented deterministically, embedded with a hashing
tf-idf encoder fit on training notes only, pooled per sample by a single
softmax attention scorer, and scored by a linear head. Training is
full-batch seeded gradient descent; the whole forward/backward is
segment-vectorized so thousands of samples stay cheap.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
import scipy.sparse as sp

from ..cohort import WindowSpec
from ..llm.gateway import complete_structured
from ..models.cox import cox_grad_eta, cox_nll_eta
from ..models.logistic import sigmoid
from ..store import ClinicalNote, PatientRecord
from .base import EvidenceItem, ModalityAssessment, ModalityUnavailable

_SENTENCE_SPLIT = re.compile(r"[.!?\n]+")
_TOKEN = re.compile(r"[a-z0-9][a-z0-9'-]*")

MAX_TOKENS_PER_SENTENCE = 64


class NoteAgentError(ValueError):
    pass


@dataclass(frozen=True)
class Sentence:
    text: str
    source_date: datetime


def segment(notes: list[ClinicalNote]) -> list[Sentence]:
    """Period/newline segmentation, chronological by note then in-note
    order. A note with no terminal punctuation is one sentence."""
    if not notes:
        raise NoteAgentError("at least one note required")
    out: list[Sentence] = []
    for note in sorted(notes, key=lambda n: n.date):
        pieces = [p.strip() for p in _SENTENCE_SPLIT.split(note.text)]
        pieces = [p for p in pieces if p]
        if not pieces:
            continue
        for p in pieces:
            out.append(Sentence(p, note.date))
    if not out:
        raise NoteAgentError("all notes empty after segmentation")
    return out


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())[:MAX_TOKENS_PER_SENTENCE]


@dataclass
class HashingTfidfEncoder:
    """Stable term hashing (crc32 modulo dim) with idf fit on the training
    documents only; vectors are L2-normalized tf-idf rows."""

    dim: int = 512
    idf: np.ndarray | None = None
    n_docs_fit: int = 0

    def _bucket(self, token: str) -> int:
        return zlib.crc32(token.encode("utf-8")) % self.dim

    def fit(self, documents: list[str]) -> "HashingTfidfEncoder":
        df = np.zeros(self.dim)
        for doc in documents:
            seen = {self._bucket(t) for t in tokenize(doc)}
            for b in seen:
                df[b] += 1
        n = len(documents)
        self.idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        self.n_docs_fit = n
        return self

    def transform(self, sentences: list[Sentence]) -> sp.csr_matrix:
        if self.idf is None:
            raise NoteAgentError("encoder must be fit on training documents first")
        rows, cols, vals = [], [], []
        for i, s in enumerate(sentences):
            counts: dict[int, float] = {}
            for t in tokenize(s.text):
                b = self._bucket(t)
                counts[b] = counts.get(b, 0.0) + 1.0
            norm_sq = 0.0
            weighted = {b: c * self.idf[b] for b, c in counts.items()}
            norm_sq = sum(v * v for v in weighted.values())
            norm = norm_sq**0.5 or 1.0
            for b, v in sorted(weighted.items()):
                rows.append(i)
                cols.append(b)
                vals.append(v / norm)
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(sentences), self.dim))


@dataclass
class EncodedBatch:
    """All samples' sentences stacked: V[i] belongs to sample seg_of[i];
    offsets mark segment starts (samples are contiguous)."""

    vectors: sp.csr_matrix
    offsets: np.ndarray  # segment start indices, len = n_samples + 1
    sentences: list[Sentence]

    @property
    def n_samples(self) -> int:
        return len(self.offsets) - 1

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def stack_batches(encoder: HashingTfidfEncoder, per_sample_sentences: list[list[Sentence]]) -> EncodedBatch:
    flat: list[Sentence] = []
    offsets = [0]
    for sents in per_sample_sentences:
        if not sents:
            raise NoteAgentError("every sample needs at least one sentence")
        flat.extend(sents)
        offsets.append(len(flat))
    return EncodedBatch(encoder.transform(flat), np.asarray(offsets, dtype=np.int64), flat)


def _segment_softmax(scores: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    starts = offsets[:-1]
    counts = np.diff(offsets)
    seg_max = np.maximum.reduceat(scores, starts)
    shifted = scores - np.repeat(seg_max, counts)
    e = np.exp(shifted)
    seg_sum = np.add.reduceat(e, starts)
    return e / np.repeat(seg_sum, counts)


def _forward(params: np.ndarray, batch: EncodedBatch):
    d = batch.vectors.shape[1]
    a, w, b = params[:d], params[d : 2 * d], params[2 * d]
    scores = batch.vectors @ a
    alpha = _segment_softmax(scores, batch.offsets)
    weighted = batch.vectors.multiply(alpha[:, None]).tocsr()
    n = batch.n_samples
    seg = sp.csr_matrix(
        (np.ones(len(alpha)), (np.repeat(np.arange(n), batch.counts()), np.arange(len(alpha)))),
        shape=(n, len(alpha)),
    )
    pooled = np.asarray((seg @ weighted).todense())
    logits = pooled @ w + b
    return logits, alpha, pooled


def attention_loss_and_grad(
    params: np.ndarray,
    batch: EncodedBatch,
    y: np.ndarray | None,
    survival: tuple[np.ndarray, np.ndarray] | None = None,
    l2: float = 1e-4,
    sample_weights: np.ndarray | None = None,
):
    """Loss and exact gradient for attention pooling + linear head.

    Binary head: weighted mean BCE-with-logits over samples (weights
    default to 1; class weighting goes through here). Survival head: Cox
    partial NLL over the pooled linear predictors.
    """
    d = batch.vectors.shape[1]
    a, w = params[:d], params[d : 2 * d]
    logits, alpha, pooled = _forward(params, batch)
    n = batch.n_samples
    if survival is None:
        p = sigmoid(logits)
        eps = 1e-12
        wts = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=float)
        wsum = float(wts.sum())
        bce = -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        loss = float((wts * bce).sum() / wsum)
        g_logit = wts * (p - y) / wsum
    else:
        times, events = survival
        loss = float(cox_nll_eta(logits, times, events)) / n
        g_logit = cox_grad_eta(logits, times, events) / n
    loss += 0.5 * l2 * float(a @ a + w @ w)

    grad_w = pooled.T @ g_logit + l2 * w
    grad_b = float(np.sum(g_logit))
    # backprop through attention: dL/dalpha_j = g_seg(j) * (v_j . w)
    vw = batch.vectors @ w
    counts = batch.counts()
    g_rep = np.repeat(g_logit, counts)
    d_alpha = g_rep * vw
    seg_dot = np.add.reduceat(alpha * d_alpha, batch.offsets[:-1])
    d_score = alpha * (d_alpha - np.repeat(seg_dot, counts))
    grad_a = batch.vectors.T @ d_score + l2 * a
    grad = np.concatenate([grad_a, grad_w, [grad_b]])
    return loss, grad


@dataclass
class AttentionModel:
    encoder: HashingTfidfEncoder
    params: np.ndarray  # [attention a (dim), head w (dim), bias b]
    dim: int
    head: str = "binary"  # binary | cox
    training_meta: dict = field(default_factory=dict)

    def score(self, sentences: list[Sentence]) -> tuple[float, np.ndarray]:
        """(risk, attention weights) for one sample's sentences. Binary
        heads return a probability; cox heads the linear predictor."""
        batch = stack_batches(self.encoder, [sentences])
        logits, alpha, _ = _forward(self.params, batch)
        value = float(sigmoid(logits)[0]) if self.head == "binary" else float(logits[0])
        return value, alpha


def train_note_model(
    encoder: HashingTfidfEncoder,
    per_sample_sentences: list[list[Sentence]],
    y: np.ndarray | None = None,
    survival: tuple[np.ndarray, np.ndarray] | None = None,
    seed: int = 0,
    epochs: int = 200,
    lr: float = 2.0,
    l2: float = 1e-4,
) -> AttentionModel:
    weights = None
    if survival is None:
        y = np.asarray(y, dtype=np.float64)
        if len(np.unique(y)) < 2:
            raise NoteAgentError("labels must contain both classes")
        n_pos = float(y.sum())
        pos_weight = min((len(y) - n_pos) / n_pos, 20.0)
        weights = np.where(y == 1, pos_weight, 1.0)
    batch = stack_batches(encoder, per_sample_sentences)
    d = encoder.dim
    rng = np.random.default_rng(seed)
    params = np.concatenate([rng.normal(0, 0.01, size=2 * d), [0.0]])
    curve = []
    for _ in range(epochs):
        loss, grad = attention_loss_and_grad(params, batch, y, survival, l2=l2, sample_weights=weights)
        params = params - lr * grad
        curve.append(loss)
    return AttentionModel(
        encoder=encoder,
        params=params,
        dim=d,
        head="binary" if survival is None else "cox",
        training_meta={"loss_curve": curve, "seed": seed, "epochs": epochs, "lr": lr, "l2": l2},
    )


def save_note_model(model: AttentionModel, path) -> None:
    """Same container idiom as the linear models: JSON header line plus a
    little-endian float64 blob holding idf then parameters."""
    import json as _json
    from pathlib import Path as _Path

    header = {
        "format_version": 1,
        "dim": model.dim,
        "head": model.head,
        "n_docs_fit": model.encoder.n_docs_fit,
        "idf_len": len(model.encoder.idf),
        "params_len": len(model.params),
        "training_meta": model.training_meta,
    }
    blob = np.concatenate([model.encoder.idf, model.params]).astype("<f8").tobytes()
    with open(path, "wb") as f:
        f.write(_json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        f.write(blob)


def load_note_model(path) -> AttentionModel:
    import json as _json
    from pathlib import Path as _Path

    raw = _Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = _json.loads(raw[:nl].decode("utf-8"))
    if header.get("format_version") != 1:
        raise NoteAgentError(f"unsupported note model format {header.get('format_version')!r}")
    data = np.frombuffer(raw[nl + 1 :], dtype="<f8")
    idf = data[: header["idf_len"]].copy()
    params = data[header["idf_len"] : header["idf_len"] + header["params_len"]].copy()
    encoder = HashingTfidfEncoder(dim=header["dim"], idf=idf, n_docs_fit=header["n_docs_fit"])
    return AttentionModel(
        encoder=encoder,
        params=params,
        dim=header["dim"],
        head=header["head"],
        training_meta=header["training_meta"],
    )


@dataclass
class NoteAgent:
    top_k: int = 5

    def sentences_in_window(self, record: PatientRecord, window: WindowSpec) -> list[Sentence]:
        notes = [n for n in record.notes if window.in_observation(n.date.date())]
        if not notes:
            return []
        try:
            return segment(notes)
        except NoteAgentError:
            return []

    def assess(
        self,
        record: PatientRecord,
        window: WindowSpec,
        model: AttentionModel,
        backend,
    ) -> ModalityAssessment | ModalityUnavailable:
        sentences = self.sentences_in_window(record, window)
        if not sentences:
            return ModalityUnavailable("note", "no notes inside the observation window")
        risk, alpha = model.score(sentences)
        order = np.argsort(-alpha, kind="mergesort")[: self.top_k]
        evidence = []
        for idx in order:
            s = sentences[int(idx)]
            polarity = complete_structured(backend, "polarity", {"ITEM": s.text}, schema="polarity")
            evidence.append(
                EvidenceItem(
                    item=s.text,
                    weight=float(alpha[int(idx)]),
                    polarity=polarity,
                    source_date=s.source_date.date().isoformat(),
                )
            )
        return ModalityAssessment(
            modality="note",
            risk=risk,
            evidence=evidence,
            model_ref=f"attention-{model.dim}",
            is_cox_score=model.head == "cox",
        )
