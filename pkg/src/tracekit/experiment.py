"""Experiment orchestration: selection, prompting, querying, scoring, persistence.

One experiment = one dataset split, one prompt, one selection strategy,
one shot count, repeated ``repeats`` times. Demonstrations are drawn
only from the training partition, so test pairs never leak into
prompts. Each repetition scores every test pair; per-pair predictions
go to an append-only JSONL log keyed by (config hash, run, pair), which
makes interrupted runs resumable and auditable.

Output directories are content-addressed by the config hash; wall-clock
timestamps only ever appear in the sidecar ``run.log``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpus, embeddings, metrics, selection
from .errors import DataError, UnparseableVerdict
from .llm_client import CompletionRequest, CompletionResponse, CostReport, PricingTable, cost_report
from .prompting import build_prompt, load_catalog, parse_final_verdict, parse_verdict

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    dataset: str  # manifest path or dataset root
    split_file: str
    prompt_id: str
    strategy: str = "random"  # random | diversity | similarity | uncertainty
    balanced: bool = True
    shots: int = 0
    repeats: int = 5
    model: str = "scripted"
    seeds: list[int] = field(default_factory=lambda: [11, 12, 13, 14, 15])
    max_concurrency: int = 4
    catalog_path: str | None = None
    vectors_file: str | None = None  # embeddings for diversity/similarity selection
    confidence_mode: str = "auto"  # for the uncertainty strategy
    log_prompts: bool = False

    def __post_init__(self) -> None:
        if self.shots not in (0, 2, 4, 6):
            raise ValueError("shots must be one of 0, 2, 4, 6")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if len(self.seeds) < self.repeats:
            raise ValueError("need at least one seed per repetition")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise DataError(f"unknown experiment config fields: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def content_hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


@dataclass
class ExperimentResult:
    runs: list[metrics.RunMetrics]
    aggregate: metrics.AggregateMetrics
    cost: CostReport
    out_dir: Path


def _zero_pricing(model: str) -> PricingTable:
    return PricingTable({model: {"input_cost_per_million": 0.0, "output_cost_per_million": 0.0}})


def _load_prediction_log(path: Path) -> dict[tuple[int, str], dict]:
    done: dict[tuple[int, str], dict] = {}
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            done[(row["run"], row["pair"])] = row
    return done


def _build_pool(
    ds: corpus.TraceDataset,
    train_pairs: list[corpus.CandidatePair],
    cfg: ExperimentConfig,
    client,
    prompt_spec,
) -> list[selection.Demonstration]:
    pool = [
        selection.Demonstration(pair=p, representation=embeddings.pair_representation(p, ds))
        for p in train_pairs
    ]
    if cfg.strategy in ("diversity", "similarity"):
        if not cfg.vectors_file:
            raise DataError(f"strategy {cfg.strategy!r} needs vectors_file for embeddings")
        ecfg = embeddings.EmbeddingProviderConfig(kind="file", file_path=cfg.vectors_file)
        vecs = embeddings.embed_texts(ecfg, [d.representation for d in pool])
        for d, v in zip(pool, vecs):
            d.embedding = v
    if cfg.strategy == "uncertainty":
        pool = selection.compute_confidences(
            pool, prompt_spec, ds, client, mode=cfg.confidence_mode
        )
    return pool


def _select_demos(
    cfg: ExperimentConfig,
    pool: list[selection.Demonstration],
    seed: int,
    query: np.ndarray | None,
) -> selection.SelectionResult:
    if cfg.balanced:
        return selection.select_label_aware(pool, cfg.strategy, cfg.shots, query=query, seed=seed)
    if cfg.strategy == "random":
        return selection.select_random(pool, cfg.shots, seed)
    if cfg.strategy == "diversity":
        return selection.select_diverse(pool, cfg.shots)
    if cfg.strategy == "similarity":
        return selection.select_similar(query, pool, cfg.shots)
    if cfg.strategy == "uncertainty":
        return selection.select_least_confident(pool, cfg.shots)
    raise ValueError(f"unknown strategy {cfg.strategy!r}")


def run_experiment(
    cfg: ExperimentConfig,
    client,
    out_root: str | Path = "runs",
    pricing: PricingTable | None = None,
) -> ExperimentResult:
    ds = corpus.load_dataset(Path(cfg.dataset))
    split = corpus.DatasetSplit.load(cfg.split_file)
    catalog = load_catalog(cfg.catalog_path)
    if cfg.prompt_id not in catalog:
        raise DataError(f"prompt id {cfg.prompt_id!r} not in catalog")
    spec = catalog[cfg.prompt_id]
    test_pairs = split.test
    if not test_pairs:
        raise DataError("split has an empty test partition")
    labels = {p.key: p.label for p in test_pairs}

    out_dir = Path(out_root) / f"cfg-{cfg.content_hash()}"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(cfg.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    pred_path = out_dir / "predictions.jsonl"
    done = _load_prediction_log(pred_path)
    run_log = out_dir / "run.log"
    cfg_hash = cfg.content_hash()

    pool: list[selection.Demonstration] = []
    query_vecs: dict[str, np.ndarray] = {}
    if cfg.shots > 0:
        pool = _build_pool(ds, split.train, cfg, client, spec)
        if cfg.strategy == "similarity":
            ecfg = embeddings.EmbeddingProviderConfig(kind="file", file_path=cfg.vectors_file)
            reps = [embeddings.pair_representation(p, ds) for p in test_pairs]
            for p, v in zip(test_pairs, embeddings.embed_texts(ecfg, reps)):
                query_vecs[p.key] = v

    usages: list[CompletionResponse] = []
    runs: list[metrics.RunMetrics] = []

    for run_idx in range(cfg.repeats):
        seed = cfg.seeds[run_idx]
        shared_demos: selection.SelectionResult | None = None
        if cfg.shots > 0 and cfg.strategy != "similarity":
            shared_demos = _select_demos(cfg, pool, seed, query=None)

        def classify(pair: corpus.CandidatePair) -> tuple[str, dict]:
            cached = done.get((run_idx, pair.key))
            if cached is not None:
                return pair.key, cached
            demos = shared_demos
            if cfg.shots > 0 and cfg.strategy == "similarity":
                demos = _select_demos(cfg, pool, seed, query=query_vecs[pair.key])
            prompt = build_prompt(spec, ds, pair, demos)
            req = CompletionRequest(
                model=cfg.model,
                prompt=prompt,
                temperature=0.0,
                max_tokens=spec.max_output_tokens,
                want_logprobs=False,
            )
            parse = parse_final_verdict if spec.reasoning_clause else parse_verdict
            row: dict = {"config": cfg_hash, "run": run_idx, "pair": pair.key, "seed": seed}
            flagged = False
            linked = False
            raw = ""
            for attempt in (0, 1):  # one retry for unparseable output
                resp = client.complete(req)
                usages.append(resp)
                raw = resp.text
                try:
                    linked = parse(raw).linked
                    break
                except UnparseableVerdict:
                    if attempt == 1:
                        flagged = True
                        linked = False  # unparseable scores as predicted-false
            row.update({"raw": raw, "predicted": linked, "unparseable": flagged})
            if cfg.log_prompts:
                row["_prompt_text"] = prompt.text
            return pair.key, row

        if cfg.max_concurrency > 1:
            with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as pool_exec:
                results = dict(pool_exec.map(classify, test_pairs))
        else:
            results = dict(classify(p) for p in test_pairs)

        if cfg.log_prompts:
            with (out_dir / "prompts.log").open("a", encoding="utf-8") as fh:
                for pair in test_pairs:
                    text = results[pair.key].pop("_prompt_text", None)
                    if text is not None:
                        fh.write(f"--- run {run_idx} pair {pair.key}\n{text}\n")

        with pred_path.open("a", encoding="utf-8") as fh:
            for pair in test_pairs:
                row = results[pair.key]
                if (run_idx, pair.key) not in done:
                    fh.write(json.dumps(row, sort_keys=True) + "\n")
                    done[(run_idx, pair.key)] = row

        predictions = {p.key: bool(results[p.key]["predicted"]) for p in test_pairs}
        run = metrics.score(
            predictions, labels,
            run_index=run_idx, shots=cfg.shots, strategy=cfg.strategy, seed=seed,
        )
        runs.append(run)
        with run_log.open("a", encoding="utf-8") as fh:
            fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} run {run_idx} "
                     f"P={run.precision:.4f} R={run.recall:.4f} F2={run.f2:.4f}\n")

    agg = metrics.aggregate(runs)
    cost = cost_report(usages, pricing or _zero_pricing(cfg.model), cfg.model)

    _write_metrics_csv(out_dir / "metrics.csv", runs, agg)
    (out_dir / "cost.json").write_text(json.dumps(cost.to_json(), indent=1) + "\n", encoding="utf-8")
    return ExperimentResult(runs=runs, aggregate=agg, cost=cost, out_dir=out_dir)


def _write_metrics_csv(path: Path, runs: list[metrics.RunMetrics], agg: metrics.AggregateMetrics) -> None:
    lines = ["row,run_index,shots,strategy,seed,tp,fp,fn,tn,precision,recall,f1,f2"]
    for r in runs:
        c = r.confusion
        lines.append(
            f"run,{r.run_index},{r.shots},{r.strategy},{r.seed},"
            f"{c.tp},{c.fp},{c.fn},{c.tn},"
            f"{r.precision:.6f},{r.recall:.6f},{r.f1:.6f},{r.f2:.6f}"
        )
    for row_name, values in (("mean", agg.mean), ("std", agg.std)):
        lines.append(
            f"{row_name},,,,,,,,,"
            f"{values['precision']:.6f},{values['recall']:.6f},{values['f1']:.6f},{values['f2']:.6f}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metrics_csv(path: str | Path) -> dict[str, list[dict]]:
    """Read a metrics.csv back into {"run": [...], "mean": [...], "std": [...]}."""
    import csv as _csv

    out: dict[str, list[dict]] = {"run": [], "mean": [], "std": []}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            kind = row.pop("row")
            out.setdefault(kind, []).append(row)
    return out
