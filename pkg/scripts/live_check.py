#!/usr/bin/env python3
"""Non-gating live check: P6 zero-shot against a real endpoint.

Runs the reusable zero-shot prompt over the test partition of a real
benchmark dataset and reports F2 next to the published zero-shot band.
Requires TRACELLM_API_BASE (and usually TRACELLM_API_KEY). Results drift
with provider updates; a miss outside the band is information, not a
build failure.

    python scripts/live_check.py --manifest /path/to/cm1/manifest.json \
        --model gpt-4o-mini --seed 17
"""

import argparse
import sys
import tempfile
from pathlib import Path

from tracekit import corpus
from tracekit.experiment import ExperimentConfig, run_experiment
from tracekit.llm_client import HttpChatClient

PUBLISHED_ZERO_SHOT_F2 = 0.61  # strongest reported zero-shot configuration
TOLERANCE = 0.10


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--model", default="gpt-4o-mini")
    parser.add_argument("--prompt-id", default="P6")
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--max-concurrency", type=int, default=4)
    args = parser.parse_args()

    manifest = Path(args.manifest)
    ds = corpus.load_dataset(manifest.parent, manifest)
    split = corpus.split_by_link(corpus.enumerate_pairs(ds), ["4", "2", "4"], args.seed)

    with tempfile.TemporaryDirectory() as tmp:
        split_path = Path(tmp) / "split.json"
        split.save(split_path)
        cfg = ExperimentConfig(
            dataset=str(manifest.parent),
            split_file=str(split_path),
            prompt_id=args.prompt_id,
            shots=0,
            repeats=1,
            seeds=[args.seed],
            model=args.model,
            max_concurrency=args.max_concurrency,
        )
        result = run_experiment(cfg, HttpChatClient(model=args.model), out_root=Path(tmp) / "runs")

    f2 = result.aggregate.mean["f2"]
    low, high = PUBLISHED_ZERO_SHOT_F2 - TOLERANCE, PUBLISHED_ZERO_SHOT_F2 + TOLERANCE
    verdict = "inside" if low <= f2 <= high else "outside"
    print(f"model={args.model} prompt={args.prompt_id} zero-shot F2={f2:.3f}")
    print(f"published band {low:.2f}-{high:.2f}: {verdict} (non-gating; drift expected)")
    print(f"cost: {result.cost.input_tokens} input / {result.cost.output_tokens} output tokens")
    return 0


if __name__ == "__main__":
    sys.exit(main())
