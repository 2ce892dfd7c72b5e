#!/usr/bin/env python3
"""Write all four benchmark-shaped synthetic datasets under ./data.

    python scripts/make_datasets.py [--out data] [--seed 94110]
"""

import argparse
from pathlib import Path

from tracekit import datagen


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data")
    parser.add_argument("--seed", type=int, default=94110)
    args = parser.parse_args()

    for shape in sorted(datagen.SHAPES):
        manifest = datagen.generate_dataset(Path(args.out) / shape, shape, seed=args.seed)
        print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
