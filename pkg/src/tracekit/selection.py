"""Demonstration selection strategies for few-shot prompting.

Four strategies over a pool of labeled demonstrations:

* random - uniform draw without replacement, order = draw order;
* diversity - greedy dissimilarity: seed with the least-similar pair,
  then repeatedly add the candidate whose summed cosine to the already
  selected set is smallest;
* similarity - top-k by cosine to a query embedding, most similar first;
* uncertainty - k least-confident items, least confident first.

The label-aware constraint wraps any of them: the pool is partitioned by
label, the base strategy runs per class with an even quota (remainder to
the true class), and the result interleaves classes starting with true.

Ties everywhere break toward the lowest pool index, and the returned
order is the order demonstrations appear in the prompt.
"""

from __future__ import annotations

import csv
import random
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import CandidatePair
from .errors import ClientError


@dataclass
class Demonstration:
    pair: CandidatePair
    representation: str
    embedding: np.ndarray | None = None
    confidence: float | None = None


@dataclass
class SelectionResult:
    selected: list[Demonstration]
    strategy: str
    k: int
    balanced: bool = False
    seed: int | None = None


STRATEGIES = ("random", "diversity", "similarity", "uncertainty")


def _clamp_k(k: int, pool_size: int, strategy: str) -> int:
    if k > pool_size:
        warnings.warn(f"{strategy}: k={k} exceeds pool size {pool_size}; returning whole pool")
        return pool_size
    return k


def _unit_rows(pool: Sequence[Demonstration], strategy: str) -> np.ndarray:
    vecs = []
    for i, d in enumerate(pool):
        if d.embedding is None:
            raise ValueError(f"{strategy}: demonstration {i} ({d.pair.key}) has no embedding")
        vecs.append(np.asarray(d.embedding, dtype=float))
    dims = {v.shape for v in vecs}
    if len(dims) > 1:
        raise ValueError(f"{strategy}: embedding dims differ across pool: {sorted(dims)}")
    mat = np.vstack(vecs)
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0):
        raise ValueError(f"{strategy}: zero-norm embedding in pool")
    return mat / norms[:, None]


def select_random(pool: Sequence[Demonstration], k: int, seed: int) -> SelectionResult:
    """k distinct items drawn uniformly without replacement; order = draw order."""
    if not pool:
        raise ValueError("random selection on empty pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = _clamp_k(k, len(pool), "random")
    rng = random.Random(seed)
    chosen = rng.sample(range(len(pool)), k)
    return SelectionResult([pool[i] for i in chosen], "random", k, seed=seed)


def select_diverse(pool: Sequence[Demonstration], k: int) -> SelectionResult:
    """Greedy semantic-diversity selection; output order is selection order."""
    if not pool:
        raise ValueError("diversity selection on empty pool")
    if k < 2:
        raise ValueError("diversity selection needs k >= 2")
    k = _clamp_k(k, len(pool), "diversity")
    if len(pool) == 1:
        return SelectionResult([pool[0]], "diversity", 1)

    unit = _unit_rows(pool, "diversity")
    sim = unit @ unit.T
    n = len(pool)

    # seed pair: the least-similar (i, j); lexicographic (i, j) on ties
    best = (1, 0, 1)  # (value, i, j) sentinel above any cosine
    for i in range(n):
        for j in range(i + 1, n):
            if (sim[i, j], i, j) < best:
                best = (sim[i, j], i, j)
    selected = [best[1], best[2]]

    remaining = [i for i in range(n) if i not in selected]
    while len(selected) < k:
        totals = sim[np.ix_(remaining, selected)].sum(axis=1)
        pick = min(range(len(remaining)), key=lambda r: (totals[r], remaining[r]))
        selected.append(remaining.pop(pick))
    return SelectionResult([pool[i] for i in selected], "diversity", k)


def select_similar(query: np.ndarray, pool: Sequence[Demonstration], k: int) -> SelectionResult:
    """Top-k by cosine to the query, most similar first."""
    if not pool:
        raise ValueError("similarity selection on empty pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = _clamp_k(k, len(pool), "similarity")
    unit = _unit_rows(pool, "similarity")
    q = np.asarray(query, dtype=float)
    if q.ndim != 1 or q.shape[0] != unit.shape[1]:
        raise ValueError(f"query dim {q.shape} does not match pool dim ({unit.shape[1]},)")
    qn = float(np.linalg.norm(q))
    if qn == 0:
        raise ValueError("zero-norm query embedding")
    sims = unit @ (q / qn)
    order = sorted(range(len(pool)), key=lambda i: (-sims[i], i))[:k]
    return SelectionResult([pool[i] for i in order], "similarity", k)


def select_least_confident(pool: Sequence[Demonstration], k: int) -> SelectionResult:
    """k items with the smallest model confidence, least confident first."""
    if not pool:
        raise ValueError("uncertainty selection on empty pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = _clamp_k(k, len(pool), "uncertainty")
    for i, d in enumerate(pool):
        if d.confidence is None:
            raise ValueError(f"uncertainty: demonstration {i} ({d.pair.key}) has no confidence")
    order = sorted(range(len(pool)), key=lambda i: (pool[i].confidence, i))[:k]
    return SelectionResult([pool[i] for i in order], "uncertainty", k)


def _dispatch(
    strategy: str,
    pool: Sequence[Demonstration],
    k: int,
    query: np.ndarray | None,
    seed: int | None,
) -> SelectionResult:
    if strategy == "random":
        if seed is None:
            raise ValueError("random selection needs a seed")
        return select_random(pool, k, seed)
    if strategy == "diversity":
        # a per-class quota of 1 is legal: run the greedy pass (which seeds
        # with a pair) and keep the leading slice of its selection order
        if len(pool) == 1:
            return SelectionResult(list(pool), "diversity", k)
        run_k = min(len(pool), max(k, 2))
        result = select_diverse(pool, run_k)
        return SelectionResult(result.selected[:k], "diversity", k)
    if strategy == "similarity":
        if query is None:
            raise ValueError("similarity selection needs a query embedding")
        return select_similar(query, pool, k)
    if strategy == "uncertainty":
        return select_least_confident(pool, k)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def select_label_aware(
    pool: Sequence[Demonstration],
    strategy: str | Callable[[Sequence[Demonstration], int], SelectionResult],
    k: int,
    query: np.ndarray | None = None,
    seed: int | None = None,
) -> SelectionResult:
    """Apply a base strategy per label class with an even budget.

    Quotas are floor(k / #classes) with the remainder given to the true
    class first; a class too small to fill its quota hands the slack to
    the other classes with a warning. The final ordering interleaves
    classes starting with true, preserving each class's internal order.
    """
    if not pool:
        raise ValueError("label-aware selection on empty pool")
    labels = (True, False)  # binary link classification; true class first
    if k < len(labels):
        warnings.warn(f"k={k} is below the number of label classes ({len(labels)})")

    by_label = {lab: [d for d in pool if d.pair.label is lab] for lab in labels}
    quotas = {lab: k // len(labels) for lab in labels}
    for lab in labels[: k % len(labels)]:
        quotas[lab] += 1

    # classes that cannot fill their quota pass the slack along
    for lab in labels:
        short = quotas[lab] - len(by_label[lab])
        if short > 0:
            warnings.warn(f"label class {lab} has only {len(by_label[lab])} member(s) "
                          f"for a quota of {quotas[lab]}; reassigning {short}")
            quotas[lab] -= short
            for other in labels:
                if other == lab:
                    continue
                room = len(by_label[other]) - quotas[other]
                give = min(room, short)
                if give > 0:
                    quotas[other] += give
                    short -= give
            # any remaining slack just shrinks the selection

    rng = random.Random(seed) if seed is not None else None
    per_class: dict[bool, list[Demonstration]] = {}
    strategy_name = strategy if isinstance(strategy, str) else getattr(strategy, "__name__", "custom")
    for lab in labels:
        quota = quotas[lab]
        if quota == 0:
            per_class[lab] = []
            continue
        class_seed = rng.randrange(2**32) if rng is not None else None
        if isinstance(strategy, str):
            result = _dispatch(strategy, by_label[lab], quota, query, class_seed)
        else:
            result = strategy(by_label[lab], quota)
        per_class[lab] = result.selected

    interleaved: list[Demonstration] = []
    cursors = {lab: 0 for lab in labels}
    while any(cursors[lab] < len(per_class[lab]) for lab in labels):
        for lab in labels:  # True first
            if cursors[lab] < len(per_class[lab]):
                interleaved.append(per_class[lab][cursors[lab]])
                cursors[lab] += 1

    return SelectionResult(interleaved, strategy_name, k, balanced=True, seed=seed)


def compute_confidences(
    pool: Sequence[Demonstration],
    spec,
    ds,
    client,
    *,
    mode: str = "auto",
    samples: int = 5,
) -> list[Demonstration]:
    """Fill each demonstration's confidence = model probability of its gold label.

    Two acquisition modes behind one contract: "logprob" reads the
    probability mass the model puts on the gold answer token (case
    variants summed); "sampling" asks ``samples`` stochastic completions
    and uses the gold-label frequency. "auto" tries logprob first and
    falls back to sampling.
    """
    from .prompting import build_prompt, parse_verdict
    from .llm_client import CompletionRequest
    from .errors import UnparseableVerdict

    if mode not in ("auto", "logprob", "sampling"):
        raise ValueError(f"unknown confidence mode {mode!r}")

    out: list[Demonstration] = []
    for demo in pool:
        prompt = build_prompt(spec, ds, demo.pair)
        gold = "yes" if demo.pair.label else "no"

        conf: float | None = None
        if mode in ("auto", "logprob"):
            req = CompletionRequest(model=getattr(client, "model", "scripted"), prompt=prompt,
                                    temperature=0.0, max_tokens=1, want_logprobs=True)
            resp = client.complete(req)
            if resp.token_logprobs:
                mass = 0.0
                for token, lp in resp.token_logprobs.items():
                    if token.strip().casefold() == gold:
                        mass += float(np.exp(lp))
                conf = min(1.0, mass)
            elif mode == "logprob":
                raise ClientError("client does not expose token log-probabilities")
        if conf is None:
            if mode == "logprob":
                raise ClientError("client does not expose token log-probabilities")
            hits = 0
            for _ in range(samples):
                req = CompletionRequest(model=getattr(client, "model", "scripted"), prompt=prompt,
                                        temperature=1.0, max_tokens=1, want_logprobs=False)
                resp = client.complete(req)
                try:
                    verdict = parse_verdict(resp.text)
                except UnparseableVerdict:
                    continue
                if verdict.linked is demo.pair.label:
                    hits += 1
            conf = hits / samples

        out.append(Demonstration(demo.pair, demo.representation, demo.embedding, conf))
    return out


def dump_selection_csv(
    path: str | Path,
    pool: Sequence[Demonstration],
    result: SelectionResult,
) -> None:
    """Write the pool with selection flags and embedding coordinates.

    Columns: pair_key,label,selected,strategy,order_index,dim,coord_0..coord_{d-1}.
    Supports external 2-D projection of the selected demonstrations.
    """
    order = {d.pair.key: i for i, d in enumerate(result.selected)}
    dims = {d.embedding.shape[0] for d in pool if d.embedding is not None}
    dim = dims.pop() if len(dims) == 1 else 0
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["pair_key", "label", "selected", "strategy", "order_index", "dim"]
            + [f"coord_{i}" for i in range(dim)]
        )
        for d in pool:
            idx = order.get(d.pair.key, None)
            coords = [repr(float(x)) for x in d.embedding] if d.embedding is not None else [""] * dim
            writer.writerow(
                [d.pair.key, int(d.pair.label), int(idx is not None), result.strategy,
                 "" if idx is None else idx, dim] + coords
            )
