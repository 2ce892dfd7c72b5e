import json
from pathlib import Path

import pytest

from tracekit import corpus, datagen


def write_dataset(
    root: Path,
    sources: dict[str, str],
    targets: dict[str, str],
    links: list[tuple[str, str]],
    meta: dict | None = None,
    name: str = "toy",
) -> Path:
    """Write a dataset directory and return the manifest path."""
    (root / "sources").mkdir(parents=True, exist_ok=True)
    (root / "targets").mkdir(parents=True, exist_ok=True)
    for sid, text in sources.items():
        (root / "sources" / f"{sid}.txt").write_text(text, encoding="utf-8")
    for tid, text in targets.items():
        (root / "targets" / f"{tid}.txt").write_text(text, encoding="utf-8")
    rows = "\n".join(f"{s},{t}" for s, t in links)
    (root / "answers.csv").write_text("source_id,target_id\n" + (rows + "\n" if rows else ""),
                                      encoding="utf-8")
    manifest = {
        "name": name,
        "template_meta": meta or {
            "domain": "a demo",
            "artifact1_name": "a requirement",
            "artifact2_name": "a design element",
            "relation_phrase": "(2) fulfill (1)",
        },
        "sources_dir": "sources",
        "targets_dir": "targets",
        "answers_csv": "answers.csv",
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def cm1_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("cm1")
    datagen.generate_dataset(root, "cm1")
    return root


@pytest.fixture(scope="session")
def cm1(cm1_root) -> corpus.TraceDataset:
    return corpus.load_dataset(cm1_root)
