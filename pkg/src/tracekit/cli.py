"""Command-line front end.

Subcommands: validate, split, baseline, run, select-dump, report, cost,
and make-data (synthetic benchmark-shaped datasets). All randomness
flows from explicit --seed flags; outputs are byte-identical across
reruns with equal inputs, timestamps live only in sidecar logs.

Exit codes: 0 success, 1 operational error, 2 data-integrity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, corpus, datagen, embeddings, metrics, selection, stats
from .errors import ClientError, DataError
from .experiment import ExperimentConfig, read_metrics_csv, run_experiment
from .llm_client import (
    CompletionResponse, HttpChatClient, PricingTable, ScriptedClient, cost_report,
    gold_echo_client,
)


def _parse_ratios(text: str) -> list[str]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must look like 4:2:4")
    return parts


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _load(manifest_arg: str) -> corpus.TraceDataset:
    p = Path(manifest_arg)
    return corpus.load_dataset(p, None) if p.is_dir() else corpus.load_dataset(p.parent, p)


def cmd_validate(args) -> int:
    ds = _load(args.manifest)
    pairs = corpus.enumerate_pairs(ds)
    n_true = sum(p.label for p in pairs)
    print(f"sources={len(ds.sources)} targets={len(ds.targets)} "
          f"true_links={len(ds.true_links)} pairs={len(pairs)}")
    print(f"false_links={len(pairs) - n_true} positive_rate={n_true / len(pairs):.4f}")
    print("ok")
    return 0


def cmd_split(args) -> int:
    ds = _load(args.manifest)
    if args.method == "by_link":
        split = corpus.split_by_link(corpus.enumerate_pairs(ds), args.ratios, args.seed)
    else:
        split = corpus.split_by_artifact(ds, args.ratios, args.seed)
    split.save(args.out)
    print(f"wrote {args.out}: train={len(split.train)} "
          f"validation={len(split.validation)} test={len(split.test)}")
    return 0


def _dataset_docs(ds: corpus.TraceDataset):
    sources = [(a.id, a.text) for a in ds.sources]
    targets = [(a.id, a.text) for a in ds.targets]
    return sources, targets


def cmd_baseline(args) -> int:
    ds = _load(args.manifest)
    split = corpus.DatasetSplit.load(args.split)
    sources, targets = _dataset_docs(ds)

    # hyperparameter grid per model; each candidate yields one score map
    candidates: list[tuple[dict, dict]] = []
    if args.model == "vsm":
        candidates.append(({}, baselines.vsm_scores(sources, targets)))
    elif args.model == "lsi":
        for k in args.lsi_components:
            candidates.append(({"n_components": k}, baselines.lsi_scores(sources, targets, k)))
    elif args.model == "lda":
        for k in args.lda_topics:
            for passes in args.lda_passes:
                candidates.append((
                    {"num_topics": k, "passes": passes},
                    baselines.lda_scores(sources, targets, k, passes, args.seed),
                ))
    elif args.model == "embed":
        if not args.vectors:
            raise DataError("--model embed needs --vectors")
        candidates.append(({}, baselines.embedding_scores(sources, targets, args.vectors)))
    else:
        raise DataError(f"unknown baseline model {args.model!r}")

    # threshold and hyperparameters are tuned on train+validation, frozen, then
    # applied to the held-out test pairs
    tune_pairs = split.train + split.validation
    if not tune_pairs:
        raise DataError("split has no train/validation pairs to tune on")
    tune_labels = {(p.source_id, p.target_id): p.label for p in tune_pairs}
    best = None
    for params, scores in candidates:
        tune_scores = {k: scores[k] for k in tune_labels}
        sweep = baselines.sweep_threshold(tune_scores, tune_labels)
        if best is None or sweep.best_f2 > best[2].best_f2:
            best = (params, scores, sweep)
    params, scores, sweep = best

    test_labels = {(p.source_id, p.target_id): p.label for p in split.test}
    preds = {k: scores[k] >= sweep.best_threshold for k in test_labels}
    run = metrics.score(
        {f"{s}::{t}": v for (s, t), v in preds.items()},
        {f"{s}::{t}": v for (s, t), v in test_labels.items()},
        strategy=args.model,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "report.csv").open("w", encoding="utf-8") as fh:
        fh.write("pair,score,threshold,predicted,label\n")
        for (s, t), label in test_labels.items():
            key = (s, t)
            fh.write(f"{s}::{t},{scores[key]!r},{sweep.best_threshold},"
                     f"{int(preds[key])},{int(label)}\n")
    with (out_dir / "sweep.csv").open("w", encoding="utf-8") as fh:
        fh.write("threshold,f2\n")
        for t, f2 in sweep.curve:
            fh.write(f"{t},{f2:.6f}\n")
    summary = {
        "model": args.model,
        "params": params,
        "threshold": sweep.best_threshold,
        "tune_f2": sweep.best_f2,
        "test": run.values(),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    print(f"{args.model} params={params} threshold={sweep.best_threshold:.2f} "
          f"P={run.precision:.4f} R={run.recall:.4f} F1={run.f1:.4f} F2={run.f2:.4f}")
    return 0


def _client_from_args(args, cfg: ExperimentConfig):
    if args.scripted_gold and args.responses:
        raise DataError("--scripted-gold conflicts with --responses; pick one client")
    if args.scripted_gold:
        ds = corpus.load_dataset(Path(cfg.dataset))
        return gold_echo_client(corpus.enumerate_pairs(ds))
    if args.responses:
        table = json.loads(Path(args.responses).read_text(encoding="utf-8"))
        return ScriptedClient(responses=table)
    return HttpChatClient(model=cfg.model)


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    for name in ("shots", "strategy", "prompt_id", "model"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.log_prompts:
        cfg.log_prompts = True
    client = _client_from_args(args, cfg)
    result = run_experiment(cfg, client, out_root=args.out)
    agg = result.aggregate
    print(f"runs={agg.n_runs} "
          f"P={agg.mean['precision']:.4f}±{agg.std['precision']:.4f} "
          f"R={agg.mean['recall']:.4f}±{agg.std['recall']:.4f} "
          f"F2={agg.mean['f2']:.4f}±{agg.std['f2']:.4f}")
    print(f"artifacts in {result.out_dir}")
    return 0


def cmd_select_dump(args) -> int:
    ds = _load(args.manifest)
    split = corpus.DatasetSplit.load(args.split)
    if not split.train:
        raise DataError("split has an empty training partition (no selection pool)")
    pool = [
        selection.Demonstration(pair=p, representation=embeddings.pair_representation(p, ds))
        for p in split.train
    ]
    query = None
    if args.strategy in ("diversity", "similarity"):
        if not args.vectors:
            raise DataError(f"strategy {args.strategy!r} needs --vectors")
        ecfg = embeddings.EmbeddingProviderConfig(kind="file", file_path=args.vectors)
        vecs = embeddings.embed_texts(ecfg, [d.representation for d in pool])
        for d, v in zip(pool, vecs):
            d.embedding = v
        if args.strategy == "similarity":
            if not args.query:
                raise DataError("similarity dump needs --query SRC::TGT")
            src_id, _, tgt_id = args.query.partition("::")
            rep = embeddings.pair_representation(corpus.CandidatePair(src_id, tgt_id, False), ds)
            query = embeddings.embed_texts(ecfg, [rep])[0]

    if args.balanced:
        result = selection.select_label_aware(pool, args.strategy, args.k, query=query, seed=args.seed)
    elif args.strategy == "random":
        result = selection.select_random(pool, args.k, args.seed)
    elif args.strategy == "diversity":
        result = selection.select_diverse(pool, args.k)
    elif args.strategy == "similarity":
        result = selection.select_similar(query, pool, args.k)
    else:
        raise DataError(f"unsupported dump strategy {args.strategy!r}")

    selection.dump_selection_csv(args.out, pool, result)
    by_label = {True: 0, False: 0}
    for d in result.selected:
        by_label[d.pair.label] += 1
    print(f"wrote {args.out}: selected={len(result.selected)} "
          f"true={by_label[True]} false={by_label[False]}")
    return 0


def cmd_report(args) -> int:
    run_dirs = [Path(d) for d in args.run_dirs]
    per_dir: dict[str, dict[str, list[float]]] = {}
    for d in run_dirs:
        rows = read_metrics_csv(d / "metrics.csv")["run"]
        per_dir[str(d)] = {
            m: [float(r[m]) for r in rows] for m in metrics.RunMetrics.METRIC_NAMES
        }
    for name, values in per_dir.items():
        f2 = values["f2"]
        mean = sum(f2) / len(f2)
        print(f"{name}: n={len(f2)} mean_f2={mean:.4f}")

    if args.compare:
        if len(run_dirs) != 2:
            raise DataError("--compare needs exactly two run directories")
        a_dir, b_dir = (str(d) for d in run_dirs)
        lines = ["metric,statistic,p_value,method,exact"]
        for m in metrics.RunMetrics.METRIC_NAMES:
            a, b = per_dir[a_dir][m], per_dir[b_dir][m]
            if args.test == "wilcoxon":
                if len(a) != len(b):
                    raise DataError(
                        f"paired wilcoxon needs equal run counts, got {len(a)} vs {len(b)}"
                    )
                res = stats.wilcoxon_signed_rank(a, b)
            else:
                res = stats.mann_whitney_u(a, b)
            lines.append(f"{m},{res.statistic},{res.p_value:.6g},{res.method},{res.exact}")
            print(f"{m}: statistic={res.statistic} p={res.p_value:.6g} "
                  f"({res.method}, exact={res.exact})")
        if args.out:
            Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_cost(args) -> int:
    pricing = PricingTable(json.loads(Path(args.pricing).read_text(encoding="utf-8")))
    doc = json.loads(Path(args.usage).read_text(encoding="utf-8"))
    usages = [
        CompletionResponse(text="", input_tokens=int(u["input_tokens"]),
                           output_tokens=int(u["output_tokens"]))
        for u in doc
    ]
    report = cost_report(usages, pricing, args.model)
    print(json.dumps(report.to_json(), indent=1))
    return 0


def cmd_make_data(args) -> int:
    manifest = datagen.generate_dataset(args.out, args.shape, seed=args.seed)
    print(f"wrote {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracekit",
                                     description="Traceability link prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check dataset integrity and print counts")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("split", help="write a train/validation/test split file")
    p.add_argument("manifest")
    p.add_argument("--method", choices=["by_link", "by_artifact"], default="by_link")
    p.add_argument("--ratios", type=_parse_ratios, default=["4", "2", "4"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("baseline", help="run an IR baseline with threshold sweep")
    p.add_argument("manifest")
    p.add_argument("--split", required=True)
    p.add_argument("--model", choices=["vsm", "lsi", "lda", "embed"], required=True)
    p.add_argument("--lsi-components", type=_parse_int_list, default=[50, 100, 150])
    p.add_argument("--lda-topics", type=_parse_int_list, default=[5, 10, 20, 30])
    p.add_argument("--lda-passes", type=_parse_int_list, default=[10, 15, 20])
    p.add_argument("--vectors", help="vector file for --model embed")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("run", help="run an experiment from a config JSON")
    p.add_argument("config")
    p.add_argument("--out", default="runs")
    p.add_argument("--shots", type=int)
    p.add_argument("--strategy")
    p.add_argument("--prompt-id", dest="prompt_id")
    p.add_argument("--model")
    p.add_argument("--scripted-gold", action="store_true",
                   help="answer every pair with its gold label (offline demo)")
    p.add_argument("--responses", help="JSON file mapping pair keys to scripted responses")
    p.add_argument("--log-prompts", dest="log_prompts", action="store_true",
                   help="write every rendered prompt verbatim to prompts.log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("select-dump", help="dump a selection pool with flags and coordinates")
    p.add_argument("manifest")
    p.add_argument("--split", required=True)
    p.add_argument("--strategy", choices=["random", "diversity", "similarity"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--vectors")
    p.add_argument("--query", help="SRC::TGT pair used as the similarity query")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select_dump)

    p = sub.add_parser("report", help="aggregate run dirs; optionally compare two")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--compare", action="store_true")
    p.add_argument("--test", choices=["wilcoxon", "mannwhitney"], default="wilcoxon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("cost", help="price a usage log against a pricing table")
    p.add_argument("--usage", required=True)
    p.add_argument("--pricing", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("make-data", help="synthesize a benchmark-shaped dataset")
    p.add_argument("--shape", choices=sorted(datagen.SHAPES), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=94110)
    p.set_defaults(func=cmd_make_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ClientError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
