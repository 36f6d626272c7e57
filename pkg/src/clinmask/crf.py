"""Linear-chain CRF: path scoring, forward-backward, Viterbi and L2-regularized training.

A sequence ``x`` is a list of feature-id collections, one per position. Label
ids index ``CrfModel.labels``. Scores follow

    score(x, y) = begin[y0] + sum_i emission(y_i, x_i) + sum_i trans[y_{i-1}, y_i] + end[y_n]

with ``emission(l, x_i) = sum_{f in x_i} W[l, f]``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .core import OUTSIDE, EntityClass, Tag
from .features import FeatureIndex, extract_sequence, index_features, vectorize

log = logging.getLogger(__name__)


class CrfNumericalError(FloatingPointError):
    pass


class CrfTrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CrfModel:
    labels: tuple
    feature_index: FeatureIndex
    emission: np.ndarray  # (L, F)
    transition: np.ndarray  # (L, L), row = previous label
    begin: np.ndarray  # (L,)
    end: np.ndarray  # (L,)
    l2_lambda: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        L, F = len(self.labels), len(self.feature_index)
        if self.emission.shape != (L, F) or self.transition.shape != (L, L):
            raise ValueError("weight shapes do not match label/feature counts")
        if self.begin.shape != (L,) or self.end.shape != (L,):
            raise ValueError("begin/end vectors must have one entry per label")
        for arr in (self.emission, self.transition, self.begin, self.end):
            if not np.all(np.isfinite(arr)):
                raise CrfNumericalError("non-finite model weight")
            arr.setflags(write=False)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def num_params(self) -> int:
        L = self.num_labels
        return self.emission.size + L * L + 2 * L

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.emission.ravel(), self.transition.ravel(), self.begin, self.end])

    def with_vector(self, theta: np.ndarray, **changes) -> "CrfModel":
        L, F = self.emission.shape
        W, T, b, e = _unpack(np.array(theta, dtype=float), L, F)
        return CrfModel(self.labels, self.feature_index, W, T, b, e,
                        changes.get("l2_lambda", self.l2_lambda),
                        changes.get("metadata", dict(self.metadata)))

    @classmethod
    def zeros(cls, labels, feature_index, l2_lambda=1.0) -> "CrfModel":
        L, F = len(labels), len(feature_index)
        return cls(tuple(labels), feature_index, np.zeros((L, F)), np.zeros((L, L)),
                   np.zeros(L), np.zeros(L), l2_lambda)


def _unpack(theta, L, F):
    W = theta[: L * F].reshape(L, F)
    T = theta[L * F: L * F + L * L].reshape(L, L)
    b = theta[L * F + L * L: L * F + L * L + L]
    e = theta[L * F + L * L + L:]
    return W, T, b, e


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def emissions(model: CrfModel, x) -> np.ndarray:
    """(n, L) emission score matrix for one sequence."""
    W = model.emission
    out = np.empty((len(x), model.num_labels))
    for i, ids in enumerate(x):
        ids = np.asarray(list(ids), dtype=np.intp)
        out[i] = W[:, ids].sum(axis=1) if ids.size else 0.0
    return out


def score_path(model: CrfModel, x, y) -> float:
    if len(x) != len(y):
        raise ValueError(f"sequence has {len(x)} positions but {len(y)} labels")
    if not x:
        raise ValueError("empty sequence")
    E = emissions(model, x)
    y = list(y)
    s = model.begin[y[0]] + model.end[y[-1]]
    s += sum(E[i, yi] for i, yi in enumerate(y))
    s += sum(model.transition[a, b] for a, b in zip(y, y[1:]))
    return float(s)


def _forward(E, T, b, e):
    """Batched log-space forward pass over emissions of shape (B, n, L)."""
    B, n, L = E.shape
    alpha = np.empty_like(E)
    alpha[:, 0] = b + E[:, 0]
    for t in range(1, n):
        alpha[:, t] = _logsumexp(alpha[:, t - 1, :, None] + T[None], axis=1) + E[:, t]
    logz = _logsumexp(alpha[:, -1] + e, axis=1)
    return alpha, logz


def _backward(E, T, e):
    B, n, L = E.shape
    beta = np.empty_like(E)
    beta[:, -1] = e
    for t in range(n - 2, -1, -1):
        beta[:, t] = _logsumexp(T[None] + (E[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
    return beta


def log_partition(model: CrfModel, x) -> float:
    if not x:
        raise ValueError("empty sequence")
    E = emissions(model, x)[None]
    _, logz = _forward(E, model.transition, model.begin, model.end)
    return float(logz[0])


def _viterbi_scores(E, T, b, e) -> list[int]:
    n, L = E.shape
    delta = b + E[0]
    back = np.empty((n, L), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + T  # (prev, cur)
        # np.argmax returns the first maximum: ties go to the lowest label id
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(L)] + E[t]
    last = int(np.argmax(delta + e))
    path = [last]
    for t in range(n - 1, 0, -1):
        last = int(back[t, last])
        path.append(last)
    return path[::-1]


def viterbi(model: CrfModel, x) -> list[int]:
    if not x:
        raise ValueError("empty sequence")
    return _viterbi_scores(emissions(model, x), model.transition, model.begin, model.end)


class CompiledBatch:
    """A training batch stacked into one sparse design matrix, bucketed by length.

    Sequences of equal length are processed together, so the forward-backward
    recursions run over (bucket, position, label) arrays without padding.
    Buckets are visited in increasing length order and members keep corpus
    order, which fixes the floating-point reduction order.
    """

    def __init__(self, pairs: Sequence, num_features: int):
        rows, cols, labels, offsets = [], [], [], [0]
        for x, y in pairs:
            if len(x) != len(y) or not x:
                raise ValueError("each sequence needs one label per position and at least one position")
            base = offsets[-1]
            for i, ids in enumerate(x):
                ids = list(ids)
                rows.extend([base + i] * len(ids))
                cols.extend(ids)
            labels.extend(int(v) for v in y)
            offsets.append(base + len(x))
        n_pos = offsets[-1]
        self.X = sp.csr_matrix((np.ones(len(rows)), (np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp))),
                               shape=(n_pos, num_features))
        self.XT = self.X.T.tocsr()
        self.y = np.asarray(labels, dtype=np.intp)
        self.num_sequences = len(pairs)
        self.buckets = {}
        for s in range(len(pairs)):
            n = offsets[s + 1] - offsets[s]
            self.buckets.setdefault(n, []).append(offsets[s])
        self.buckets = {n: np.asarray(starts, dtype=np.intp)[:, None] + np.arange(n)[None]
                        for n, starts in sorted(self.buckets.items())}


def _objective(theta, L, F, batch: CompiledBatch, l2: float, need_grad=True):
    W, T, b, e = _unpack(theta, L, F)
    nll = 0.5 * l2 * float(theta @ theta)
    if batch.num_sequences == 0:
        return (nll, l2 * theta.copy()) if need_grad else (nll, None)
    E_all = batch.X @ W.T  # (positions, L)
    y = batch.y
    if need_grad:
        P = np.zeros_like(E_all)
        gT = np.zeros((L, L))
        gb = np.zeros(L)
        ge = np.zeros(L)
    for n, pos in batch.buckets.items():
        E = E_all[pos]  # (B, n, L)
        Y = y[pos]
        alpha, logz = _forward(E, T, b, e)
        gold = b[Y[:, 0]] + e[Y[:, -1]] + np.take_along_axis(E, Y[:, :, None], axis=2)[:, :, 0].sum(axis=1)
        if n > 1:
            gold += T[Y[:, :-1], Y[:, 1:]].sum(axis=1)
        diff = logz - gold
        if not np.all(np.isfinite(diff)):
            bad = int(np.flatnonzero(~np.isfinite(diff))[0])
            raise CrfNumericalError(f"non-finite log-likelihood for sequence at positions {pos[bad, 0]}..{pos[bad, -1]}")
        nll += float(diff.sum())
        if not need_grad:
            continue
        beta = _backward(E, T, e)
        marg = np.exp(alpha + beta - logz[:, None, None])
        P[pos] = marg
        gb += marg[:, 0].sum(axis=0)
        ge += marg[:, -1].sum(axis=0)
        np.subtract.at(gb, Y[:, 0], 1.0)
        np.subtract.at(ge, Y[:, -1], 1.0)
        if n > 1:
            pair = (alpha[:, :-1, :, None] + T[None, None] + (E[:, 1:] + beta[:, 1:])[:, :, None, :]
                    - logz[:, None, None, None])
            gT += np.exp(pair).sum(axis=(0, 1))
            np.subtract.at(gT, (Y[:, :-1].ravel(), Y[:, 1:].ravel()), 1.0)
    if not need_grad:
        return nll, None
    P[np.arange(len(y)), y] -= 1.0
    gW = np.asarray((batch.XT @ P).T)
    grad = np.concatenate([gW.ravel(), gT.ravel(), gb, ge]) + l2 * theta
    return nll, grad


def nll_and_gradient(model: CrfModel, batch: Sequence) -> tuple[float, np.ndarray]:
    """Regularized negative log-likelihood of ``batch`` and its gradient.

    The gradient is laid out like ``model.to_vector()``.
    """
    compiled = batch if isinstance(batch, CompiledBatch) else CompiledBatch(batch, len(model.feature_index))
    L, F = model.emission.shape
    return _objective(model.to_vector(), L, F, compiled, model.l2_lambda)


@dataclass
class CrfConfig:
    l2: float = 1.0
    max_epochs: int = 100
    tol: float = 1e-3
    armijo_c: float = 1e-4
    max_backtracks: int = 40
    use_gazetteers: bool = False

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class TrainingResult:
    model: CrfModel
    nll_history: list
    converged: bool


def fit(model: CrfModel, batch: CompiledBatch, config: CrfConfig) -> TrainingResult:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    Each epoch takes one accepted step, so the recorded NLL never increases.
    """
    L, F = model.emission.shape
    theta = model.to_vector().astype(float)
    f, g = _objective(theta, L, F, batch, config.l2)
    history = [f]
    step = 1.0 / max(1.0, float(np.linalg.norm(g)))
    prev = None
    increases = 0
    converged = False
    for epoch in range(config.max_epochs):
        if float(np.max(np.abs(g))) < config.tol:
            converged = True
            break
        if prev is not None:
            s, d = theta - prev[0], g - prev[1]
            sd = float(s @ d)
            if sd > 0:
                step = sd / float(d @ d)
        gg = float(g @ g)
        for _ in range(config.max_backtracks):
            cand = theta - step * g
            fc, _ = _objective(cand, L, F, batch, config.l2, need_grad=False)
            if fc <= f - config.armijo_c * step * gg:
                break
            step *= 0.5
        else:
            log.info("line search stalled at epoch %d", epoch)
            converged = float(np.max(np.abs(g))) < config.tol
            break
        fc, gc = _objective(cand, L, F, batch, config.l2)
        increases = increases + 1 if fc > f else 0
        if increases >= 3:
            raise CrfTrainingError(f"NLL increased for 3 consecutive epochs (last {fc:.6g} at epoch {epoch})")
        prev = (theta, g)
        theta, f, g = cand, fc, gc
        history.append(f)
        log.debug("epoch %d nll %.6f step %.3g", epoch, f, step)
    else:
        converged = float(np.max(np.abs(g))) < config.tol
    meta = dict(model.metadata)
    meta.update(epochs=len(history) - 1, final_nll=f, converged=converged)
    return TrainingResult(model.with_vector(theta, metadata=meta), history, converged)


def label_set(tag_sequences) -> tuple:
    """O first, then B/I pairs for each observed class in enumeration order."""
    seen = {t.entity_class for seq in tag_sequences for t in seq if t.entity_class is not None}
    labels = [OUTSIDE]
    for cls in EntityClass:
        if cls in seen:
            labels += [Tag("B", cls), Tag("I", cls)]
    return tuple(labels)


def train_from_features(features: Sequence, labels: Sequence, config: CrfConfig,
                        gazetteer_names: Sequence[str] = ()) -> TrainingResult:
    """Index features, fix the label order and fit from zero weights."""
    if not features:
        raise CrfTrainingError("empty training corpus")
    index = index_features(features)
    tagset = label_set(labels)
    lid = {t: i for i, t in enumerate(tagset)}
    pairs = [([vectorize(v, index) for v in fs], [lid[t] for t in tags]) for fs, tags in zip(features, labels)]
    model = CrfModel.zeros(tagset, index, config.l2)
    model = model.with_vector(model.to_vector(), metadata={
        "config": asdict(config), "config_hash": config.digest(),
        "gazetteers": list(gazetteer_names) if config.use_gazetteers else [],
    })
    log.info("training CRF: %d sequences, %d labels, %d features", len(pairs), len(tagset), len(index))
    return fit(model, CompiledBatch(pairs, len(index)), config)


def train_crf(corpus: Sequence, config: Optional[CrfConfig] = None, gazetteers=()) -> TrainingResult:
    """Train on ``(tokens, tags)`` sentence pairs."""
    config = config or CrfConfig()
    corpus = [(list(toks), list(tags)) for toks, tags in corpus if len(toks)]
    feats = [extract_sequence(toks, config.use_gazetteers, gazetteers) for toks, _ in corpus]
    return train_from_features(feats, [tags for _, tags in corpus], config, [g.name for g in gazetteers])
