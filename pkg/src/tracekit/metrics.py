"""Confusion-based metrics and run aggregation.

F-beta uses beta = 2 as the headline metric: recall is weighted four
times precision in the harmonic combination, matching how traceability
work values not missing true links. All zero-denominator cases score 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def precision_of(c: Confusion) -> float:
    return c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0


def recall_of(c: Confusion) -> float:
    return c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0


def f_beta(precision: float, recall: float, beta: float = 2.0) -> float:
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    denom = b2 * precision + recall
    return (1 + b2) * precision * recall / denom if denom else 0.0


@dataclass
class RunMetrics:
    confusion: Confusion
    precision: float
    recall: float
    f1: float
    f2: float
    run_index: int = 0
    shots: int = 0
    strategy: str = ""
    seed: int = 0

    METRIC_NAMES = ("precision", "recall", "f1", "f2")

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.METRIC_NAMES}


def score(
    predictions: Mapping[str, bool],
    labels: Mapping[str, bool],
    *,
    run_index: int = 0,
    shots: int = 0,
    strategy: str = "",
    seed: int = 0,
) -> RunMetrics:
    """Score one run of pair predictions against gold labels (key sets must match)."""
    if set(predictions) != set(labels):
        missing = set(labels) - set(predictions)
        extra = set(predictions) - set(labels)
        raise ValueError(f"prediction/label key mismatch: missing={len(missing)} extra={len(extra)}")
    tp = fp = fn = tn = 0
    for key, pred in predictions.items():
        gold = labels[key]
        if pred and gold:
            tp += 1
        elif pred and not gold:
            fp += 1
        elif not pred and gold:
            fn += 1
        else:
            tn += 1
    c = Confusion(tp, fp, fn, tn)
    p, r = precision_of(c), recall_of(c)
    return RunMetrics(
        confusion=c,
        precision=p,
        recall=r,
        f1=f_beta(p, r, beta=1.0),
        f2=f_beta(p, r, beta=2.0),
        run_index=run_index,
        shots=shots,
        strategy=strategy,
        seed=seed,
    )


@dataclass
class AggregateMetrics:
    mean: dict[str, float]
    std: dict[str, float]
    n_runs: int


def aggregate(runs: Sequence[RunMetrics]) -> AggregateMetrics:
    """Mean and sample (n-1) standard deviation per metric; std is 0 for one run."""
    if not runs:
        raise ValueError("aggregate needs at least one run")
    n = len(runs)
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in RunMetrics.METRIC_NAMES:
        vals = [getattr(r, name) for r in runs]
        m = sum(vals) / n
        mean[name] = m
        std[name] = math.sqrt(sum((v - m) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
    return AggregateMetrics(mean=mean, std=std, n_runs=n)
