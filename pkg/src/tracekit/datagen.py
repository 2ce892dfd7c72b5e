"""Synthesize benchmark-shaped traceability datasets for offline work.

The shapes mirror four widely used public benchmarks in source/target
counts, true-link counts, and template metadata, with deterministic
synthetic artifact text. Handy for demos, CLI smoke runs, and the
acceptance suite; the texts carry no meaning beyond being distinct,
non-empty, and tokenizable.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class DatasetShape:
    name: str
    n_sources: int
    n_targets: int
    n_links: int
    source_prefix: str
    target_prefix: str
    meta: dict


SHAPES: dict[str, DatasetShape] = {
    "cm1": DatasetShape(
        name="cm1", n_sources=22, n_targets=53, n_links=45,
        source_prefix="REQ", target_prefix="DES",
        meta={
            "domain": "an aerospace",
            "artifact1_name": "a high-level requirement",
            "artifact2_name": "a design element",
            "relation_phrase": "(2) fulfill (1)",
        },
    ),
    "easyclinic-uc-tc": DatasetShape(
        name="easyclinic-uc-tc", n_sources=30, n_targets=63, n_links=63,
        source_prefix="UC", target_prefix="TC",
        meta={
            "domain": "a healthcare",
            "artifact1_name": "a use case",
            "artifact2_name": "a test case",
            "relation_phrase": "(2) test (1)",
        },
    ),
    "easyclinic-uc-id": DatasetShape(
        name="easyclinic-uc-id", n_sources=30, n_targets=20, n_links=26,
        source_prefix="UC", target_prefix="ID",
        meta={
            "domain": "a healthcare",
            "artifact1_name": "a use case",
            "artifact2_name": "an interaction diagram",
            "relation_phrase": "(2) realize (1)",
        },
    ),
    "cchit": DatasetShape(
        name="cchit", n_sources=1064, n_targets=10, n_links=78,
        source_prefix="REQ", target_prefix="REG",
        meta={
            "domain": "a healthcare",
            "artifact1_name": "a requirement",
            "artifact2_name": "a regulation",
            "relation_phrase": "(1) satisfy (2)",
        },
    ),
}

_NOUNS = ["buffer", "queue", "record", "sensor", "telemetry", "monitor", "schedule",
          "login", "archive", "report", "command", "diagnostic", "channel", "session"]
_VERBS = ["shall store", "shall validate", "shall transmit", "shall initialize",
          "shall reject", "shall encrypt", "shall display", "shall log"]


def _artifact_text(prefix: str, idx: int, rng: random.Random) -> str:
    subsystem = f"{prefix}-{idx:04d}"
    noun = rng.choice(_NOUNS)
    verb = rng.choice(_VERBS)
    extra = " ".join(rng.choice(_NOUNS) for _ in range(rng.randint(2, 6)))
    return f"The {subsystem} module {verb} the {noun} data. Related items: {extra}."


def generate_dataset(root: str | Path, shape: str | DatasetShape, seed: int = 94110) -> Path:
    """Write a dataset under ``root`` and return the manifest path."""
    if isinstance(shape, str):
        if shape not in SHAPES:
            raise ValueError(f"unknown shape {shape!r}; expected one of {sorted(SHAPES)}")
        shape = SHAPES[shape]
    rng = random.Random(seed)
    root = Path(root)
    (root / "sources").mkdir(parents=True, exist_ok=True)
    (root / "targets").mkdir(parents=True, exist_ok=True)

    source_ids = [f"{shape.source_prefix}{i:04d}" for i in range(1, shape.n_sources + 1)]
    target_ids = [f"{shape.target_prefix}{i:04d}" for i in range(1, shape.n_targets + 1)]
    for i, sid in enumerate(source_ids, start=1):
        (root / "sources" / f"{sid}.txt").write_text(
            _artifact_text(shape.source_prefix, i, rng) + "\n", encoding="utf-8"
        )
    for i, tid in enumerate(target_ids, start=1):
        (root / "targets" / f"{tid}.txt").write_text(
            _artifact_text(shape.target_prefix, i, rng) + "\n", encoding="utf-8"
        )

    all_cells = shape.n_sources * shape.n_targets
    picks = rng.sample(range(all_cells), shape.n_links)
    links = sorted((divmod(cell, shape.n_targets)) for cell in picks)
    with (root / "answers.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "target_id"])
        for si, ti in links:
            writer.writerow([source_ids[si], target_ids[ti]])

    manifest = {
        "name": shape.name,
        "template_meta": shape.meta,
        "sources_dir": "sources",
        "targets_dir": "targets",
        "answers_csv": "answers.csv",
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return manifest_path
