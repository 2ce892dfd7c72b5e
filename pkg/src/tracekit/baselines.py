"""IR similarity baselines and the F2-maximizing threshold sweep.

Four scorers map (source, target) pairs to similarity in [-1, 1]:

* vsm - cosine of TF-IDF vectors (tf = raw count,
  idf = ln((1+N)/(1+df)) + 1, fitted jointly over sources and targets);
* lsi - cosine in the rank-k SVD projection of the TF-IDF matrix;
* lda - cosine of per-document topic distributions from a collapsed
  Gibbs sampler with symmetric priors (alpha = 50/K, beta = 0.01),
  averaged over post-burn-in passes (burn-in = first half);
* embedding - cosine of externally supplied vectors.

Classification happens downstream: sweep a threshold grid, score >= t
means linked, and keep the t maximizing F2 on the tuning partition.

Preprocessing: lowercase, split on non-alphanumerics keeping intra-word
hyphens (requirement ids like "DPU-CCM" survive), drop the shipped
stopword list. The stopword list is versioned in-repo so results do not
depend on locale defaults.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .metrics import f_beta

Pair = tuple[str, str]
Doc = tuple[str, str]  # (artifact id, text)

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("tracekit").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


def preprocess(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Deterministic token list: lowercase, hyphen-keeping split, stopwords removed."""
    tokens = [t for t in _TOKEN_RE.findall(text.lower()) if t not in stopwords]
    if not tokens and text.strip():
        warnings.warn(f"document reduced to no tokens after preprocessing: {text[:40]!r}")
    return tokens


def _fit_tfidf(docs: Sequence[list[str]]) -> tuple[list[str], np.ndarray]:
    vocab = sorted({t for doc in docs for t in doc})
    if not vocab:
        raise ValueError("empty vocabulary: no tokens survive preprocessing")
    index = {t: i for i, t in enumerate(vocab)}
    n_docs = len(docs)
    counts = np.zeros((n_docs, len(vocab)))
    for row, doc in enumerate(docs):
        for tok in doc:
            counts[row, index[tok]] += 1.0
    df = (counts > 0).sum(axis=0)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return vocab, counts * idf


def _pair_cosines(src_rows: np.ndarray, tgt_rows: np.ndarray,
                  sources: Sequence[Doc], targets: Sequence[Doc]) -> dict[Pair, float]:
    src_norm = np.linalg.norm(src_rows, axis=1)
    tgt_norm = np.linalg.norm(tgt_rows, axis=1)
    sims = src_rows @ tgt_rows.T
    denom = np.outer(src_norm, tgt_norm)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0, sims / denom, 0.0)  # empty doc scores 0
    sims = np.clip(sims, -1.0, 1.0)
    return {
        (s[0], t[0]): float(sims[i, j])
        for i, s in enumerate(sources)
        for j, t in enumerate(targets)
    }


def vsm_scores(sources: Sequence[Doc], targets: Sequence[Doc]) -> dict[Pair, float]:
    """TF-IDF cosine for every (source, target) pair, corpus fitted jointly."""
    docs = [preprocess(text) for _, text in list(sources) + list(targets)]
    _, weights = _fit_tfidf(docs)
    n_src = len(sources)
    return _pair_cosines(weights[:n_src], weights[n_src:], sources, targets)


def lsi_scores(sources: Sequence[Doc], targets: Sequence[Doc], n_components: int) -> dict[Pair, float]:
    """Cosine in the rank-k left-singular projection of the joint TF-IDF matrix."""
    docs = [preprocess(text) for _, text in list(sources) + list(targets)]
    _, weights = _fit_tfidf(docs)
    max_rank = min(weights.shape)
    k = n_components
    if k > max_rank:
        warnings.warn(f"n_components={k} exceeds matrix rank bound {max_rank}; clamping")
        k = max_rank
    if k < 1:
        raise ValueError("n_components must be >= 1")
    u, s, _vt = np.linalg.svd(weights, full_matrices=False)
    projected = u[:, :k] * s[:k]
    n_src = len(sources)
    return _pair_cosines(projected[:n_src], projected[n_src:], sources, targets)


@dataclass
class LdaModel:
    """Per-document topic distributions from collapsed Gibbs sampling."""

    theta: np.ndarray  # (n_docs, K), rows sum to 1
    num_topics: int
    passes: int
    seed: int


def fit_lda(docs: Sequence[list[str]], num_topics: int, passes: int, seed: int) -> LdaModel:
    if num_topics < 1 or passes < 1:
        raise ValueError("num_topics and passes must be >= 1")
    vocab = sorted({t for doc in docs for t in doc})
    index = {t: i for i, t in enumerate(vocab)}
    n_vocab = max(len(vocab), 1)
    k = num_topics
    alpha = 50.0 / k
    beta = 0.01

    rng = np.random.default_rng(seed)
    token_ids = [[index[t] for t in doc] for doc in docs]
    n_dk = np.zeros((len(docs), k))
    n_kw = np.zeros((k, n_vocab))
    n_k = np.zeros(k)
    assignments = []
    for d, ids in enumerate(token_ids):
        z = rng.integers(0, k, size=len(ids))
        assignments.append(z)
        for w, topic in zip(ids, z):
            n_dk[d, topic] += 1
            n_kw[topic, w] += 1
            n_k[topic] += 1

    burn_in = passes // 2
    theta_acc = np.zeros((len(docs), k))
    kept = 0
    doc_lens = np.array([len(ids) for ids in token_ids], dtype=float)
    for sweep in range(passes):
        for d, ids in enumerate(token_ids):
            z = assignments[d]
            for pos, w in enumerate(ids):
                topic = z[pos]
                n_dk[d, topic] -= 1
                n_kw[topic, w] -= 1
                n_k[topic] -= 1
                p = (n_dk[d] + alpha) * (n_kw[:, w] + beta) / (n_k + n_vocab * beta)
                total = p.sum()
                new_topic = int(np.searchsorted(np.cumsum(p), rng.random() * total, side="right"))
                new_topic = min(new_topic, k - 1)
                z[pos] = new_topic
                n_dk[d, new_topic] += 1
                n_kw[new_topic, w] += 1
                n_k[new_topic] += 1
        if sweep >= burn_in:
            theta_acc += (n_dk + alpha) / (doc_lens + k * alpha)[:, None]
            kept += 1
    theta = theta_acc / kept
    theta = theta / theta.sum(axis=1, keepdims=True)
    return LdaModel(theta=theta, num_topics=k, passes=passes, seed=seed)


def lda_scores(
    sources: Sequence[Doc],
    targets: Sequence[Doc],
    num_topics: int,
    passes: int,
    seed: int,
) -> dict[Pair, float]:
    """Cosine of averaged topic distributions for every pair."""
    docs = [preprocess(text) for _, text in list(sources) + list(targets)]
    model = fit_lda(docs, num_topics, passes, seed)
    n_src = len(sources)
    return _pair_cosines(model.theta[:n_src], model.theta[n_src:], sources, targets)


def embedding_scores(
    sources: Sequence[Doc],
    targets: Sequence[Doc],
    vectors_file: str,
) -> dict[Pair, float]:
    """Cosine of externally precomputed artifact embeddings (vector file keyed by text)."""
    from .embeddings import EmbeddingProviderConfig, embed_texts

    cfg = EmbeddingProviderConfig(kind="file", file_path=vectors_file)
    src_vecs = np.vstack(embed_texts(cfg, [text for _, text in sources]))
    tgt_vecs = np.vstack(embed_texts(cfg, [text for _, text in targets]))
    return _pair_cosines(src_vecs, tgt_vecs, sources, targets)


DEFAULT_GRID = tuple(round(i / 100, 2) for i in range(1, 101))


@dataclass
class ThresholdSweepResult:
    best_threshold: float
    best_f2: float
    curve: list[tuple[float, float]]


def sweep_threshold(
    scores: Mapping[Pair, float],
    labels: Mapping[Pair, bool],
    grid: Sequence[float] = DEFAULT_GRID,
) -> ThresholdSweepResult:
    """Evaluate F2 of "score >= t" on every grid point; argmax, ties to smallest t."""
    if set(scores) != set(labels):
        raise ValueError("scores and labels must cover the same pairs")
    if not scores:
        raise ValueError("empty score map")
    keys = list(scores)
    s = np.array([scores[k] for k in keys])
    y = np.array([labels[k] for k in keys], dtype=bool)
    if y.all() or not y.any():
        warnings.warn("labels are a single class; F2 sweep is degenerate")

    curve = []
    best_t, best_f2 = None, -1.0
    for t in grid:
        pred = s >= t
        tp = int(np.sum(pred & y))
        fp = int(np.sum(pred & ~y))
        fn = int(np.sum(~pred & y))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f2 = f_beta(precision, recall, beta=2.0)
        curve.append((float(t), f2))
        if f2 > best_f2:
            best_t, best_f2 = float(t), f2
    return ThresholdSweepResult(best_threshold=best_t, best_f2=best_f2, curve=curve)
