#!/usr/bin/env python3
"""Fully offline demo: 2-shot balanced diversity on the CM1-shaped dataset.

Generates the dataset, splits 4:2:4, builds deterministic pair embeddings,
and runs five repetitions against a scripted gold-echo client. Everything
is reproducible from the seeds; no network access.

    python scripts/run_cm1_demo.py [--workdir demo_run]
"""

import argparse
import random
from pathlib import Path

from tracekit import corpus, datagen, embeddings
from tracekit.experiment import ExperimentConfig, run_experiment
from tracekit.llm_client import gold_echo_client


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_run")
    parser.add_argument("--shots", type=int, default=2, choices=[0, 2, 4, 6])
    parser.add_argument("--strategy", default="diversity",
                        choices=["random", "diversity", "similarity", "uncertainty"])
    args = parser.parse_args()

    work = Path(args.workdir)
    root = work / "cm1"
    datagen.generate_dataset(root, "cm1")
    ds = corpus.load_dataset(root)
    pairs = corpus.enumerate_pairs(ds)
    split = corpus.split_by_link(pairs, ["4", "2", "4"], seed=17)
    split_path = work / "split.json"
    split.save(split_path)

    rng = random.Random(8)
    vec_path = work / "vectors.json"
    embeddings.write_vector_file(vec_path, {
        embeddings.pair_representation(p, ds): [rng.uniform(-1, 1) for _ in range(8)]
        for p in pairs
    })

    cfg = ExperimentConfig(
        dataset=str(root),
        split_file=str(split_path),
        prompt_id="P6",
        strategy=args.strategy,
        balanced=True,
        shots=args.shots,
        repeats=5,
        seeds=[101, 102, 103, 104, 105],
        vectors_file=str(vec_path),
    )
    result = run_experiment(cfg, gold_echo_client(pairs), out_root=work / "runs")
    agg = result.aggregate
    print(f"{args.shots}-shot {args.strategy}: "
          f"P={agg.mean['precision']:.3f}±{agg.std['precision']:.3f} "
          f"R={agg.mean['recall']:.3f}±{agg.std['recall']:.3f} "
          f"F2={agg.mean['f2']:.3f}±{agg.std['f2']:.3f} over {agg.n_runs} runs")
    print(f"artifacts: {result.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
