"""Traceability datasets: loading, pair enumeration, and train/val/test splits.

A dataset on disk is a manifest JSON naming two directories of artifact
text files (``<id>.txt``, UTF-8) and an answer-set CSV with header
``source_id,target_id`` listing the true links. Artifacts are read in
lexicographic id order; that order is the canonical enumeration order
everywhere downstream.

Split randomness comes from the stdlib Mersenne Twister
(``random.Random(seed)``), so equal seeds give identical splits on any
platform. Subset sizes use exact largest-remainder apportionment over
``fractions.Fraction`` ratios; ties on fractional parts are resolved in
favor of the later subset (test, then validation, then train) so
evaluation data is never starved.
"""

from __future__ import annotations

import csv
import json
import logging
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

log = logging.getLogger(__name__)

META_FIELDS = ("domain", "artifact1_name", "artifact2_name", "relation_phrase")


@dataclass(frozen=True)
class Artifact:
    id: str
    side: str  # "source" | "target"
    text: str


@dataclass(frozen=True)
class CandidatePair:
    source_id: str
    target_id: str
    label: bool

    @property
    def key(self) -> str:
        return pair_key(self.source_id, self.target_id)


def pair_key(source_id: str, target_id: str) -> str:
    return f"{source_id}::{target_id}"


@dataclass
class TraceDataset:
    name: str
    sources: list[Artifact]
    targets: list[Artifact]
    true_links: set[tuple[str, str]]
    template_meta: dict[str, str]

    def __post_init__(self) -> None:
        src_ids = {a.id for a in self.sources}
        tgt_ids = {a.id for a in self.targets}
        for s, t in self.true_links:
            if s not in src_ids:
                raise DataError(f"answer set references unknown source id {s!r}")
            if t not in tgt_ids:
                raise DataError(f"answer set references unknown target id {t!r}")

    def source_text(self, source_id: str) -> str:
        return self._index("source")[source_id]

    def target_text(self, target_id: str) -> str:
        return self._index("target")[target_id]

    def _index(self, side: str) -> dict[str, str]:
        cache = self.__dict__.setdefault("_text_cache", {})
        if side not in cache:
            arts = self.sources if side == "source" else self.targets
            cache[side] = {a.id: a.text for a in arts}
        return cache[side]


@dataclass
class DatasetSplit:
    train: list[CandidatePair]
    validation: list[CandidatePair]
    test: list[CandidatePair]
    seed: int
    method: str  # "by_link" | "by_artifact"
    ratios: tuple[Fraction, Fraction, Fraction]

    def subsets(self) -> tuple[list[CandidatePair], list[CandidatePair], list[CandidatePair]]:
        return self.train, self.validation, self.test

    def to_json(self) -> dict:
        def rows(pairs: list[CandidatePair]) -> list[dict]:
            return [
                {"source_id": p.source_id, "target_id": p.target_id, "label": p.label}
                for p in pairs
            ]

        return {
            "method": self.method,
            "seed": self.seed,
            "ratios": [str(r) for r in self.ratios],
            "train": rows(self.train),
            "validation": rows(self.validation),
            "test": rows(self.test),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, doc: dict) -> "DatasetSplit":
        def pairs(rows: Iterable[dict]) -> list[CandidatePair]:
            return [CandidatePair(r["source_id"], r["target_id"], bool(r["label"])) for r in rows]

        ratios = tuple(Fraction(r) for r in doc["ratios"])
        if len(ratios) != 3:
            raise DataError("split file must carry exactly three ratios")
        return cls(
            train=pairs(doc["train"]),
            validation=pairs(doc["validation"]),
            test=pairs(doc["test"]),
            seed=int(doc["seed"]),
            method=doc["method"],
            ratios=ratios,  # type: ignore[arg-type]
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetSplit":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _read_artifacts(directory: Path, side: str) -> list[Artifact]:
    if not directory.is_dir():
        raise DataError(f"{side} directory not found: {directory}")
    files = sorted(directory.glob("*.txt"), key=lambda p: p.stem)
    if not files:
        raise DataError(f"no artifact files in {side} directory {directory}")
    seen: set[str] = set()
    artifacts = []
    for path in files:
        art_id = path.stem
        if art_id in seen:
            raise DataError(f"duplicate {side} id {art_id!r}")
        seen.add(art_id)
        text = path.read_text(encoding="utf-8").strip()
        if not text:
            raise DataError(f"empty artifact text: {path}")
        artifacts.append(Artifact(id=art_id, side=side, text=text))
    return artifacts


def _read_answers(path: Path) -> list[tuple[str, str]]:
    if not path.is_file():
        raise DataError(f"answer-set file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"answer-set file is empty (expected header): {path}") from None
        if [h.strip() for h in header] != ["source_id", "target_id"]:
            raise DataError(f"answer-set header must be 'source_id,target_id', got {header!r}")
        links = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise DataError(f"malformed answer row {lineno} in {path}: {row!r}")
            links.append((row[0].strip(), row[1].strip()))
    return links


def load_dataset(root: str | Path, manifest: str | Path | None = None) -> TraceDataset:
    """Load a dataset described by ``manifest`` (default ``<root>/manifest.json``).

    Raises DataError on missing files, duplicate ids, unknown ids in the
    answer set, or empty artifact text.
    """
    root = Path(root)
    manifest_path = Path(manifest) if manifest is not None else root / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {manifest_path}: {exc}") from exc

    base = manifest_path.parent
    meta = doc.get("template_meta", {})
    missing = [f for f in META_FIELDS if f not in meta]
    if missing:
        raise DataError(f"template_meta missing fields: {missing}")

    sources = _read_artifacts(base / doc["sources_dir"], "source")
    targets = _read_artifacts(base / doc["targets_dir"], "target")
    raw_links = _read_answers(base / doc["answers_csv"])

    links: set[tuple[str, str]] = set()
    for link in raw_links:
        if link in links:
            warnings.warn(f"duplicate answer row for {link}; keeping one")
        links.add(link)

    ds = TraceDataset(
        name=doc.get("name", root.name),
        sources=sources,
        targets=targets,
        true_links=links,
        template_meta={f: meta[f] for f in META_FIELDS},
    )
    log.info(
        "loaded dataset %s: sources=%d targets=%d true_links=%d",
        ds.name, len(ds.sources), len(ds.targets), len(ds.true_links),
    )
    return ds


def enumerate_pairs(ds: TraceDataset) -> list[CandidatePair]:
    """All |sources| x |targets| candidate pairs, sources outer, targets inner."""
    return [
        CandidatePair(s.id, t.id, (s.id, t.id) in ds.true_links)
        for s in ds.sources
        for t in ds.targets
    ]


def normalize_ratios(ratios: Sequence) -> tuple[Fraction, Fraction, Fraction]:
    """Turn three non-negative numbers (or strings like "4") into exact fractions summing to 1."""
    if len(ratios) != 3:
        raise ValueError("need exactly three ratios (train, validation, test)")
    fracs = []
    for r in ratios:
        f = Fraction(str(r)) if not isinstance(r, Fraction) else r
        if f < 0:
            raise ValueError(f"ratios must be non-negative, got {r}")
        fracs.append(f)
    total = sum(fracs)
    if total == 0:
        raise ValueError("ratios must not all be zero")
    return tuple(f / total for f in fracs)  # type: ignore[return-value]


def allocate(n: int, ratios: tuple[Fraction, Fraction, Fraction]) -> tuple[int, int, int]:
    """Largest-remainder apportionment of ``n`` items across three subsets.

    Fractional-part ties go to the later subset, so a single leftover
    item under 4:2:4 lands in test rather than train.
    """
    shares = [n * r for r in ratios]
    counts = [int(s) for s in shares]  # Fraction floor for non-negative values
    remainders = [s - c for s, c in zip(shares, counts)]
    seats = n - sum(counts)
    for i in sorted(range(3), key=lambda i: (-remainders[i], -i))[:seats]:
        counts[i] += 1
    return tuple(counts)  # type: ignore[return-value]


def split_by_link(
    pairs: Sequence[CandidatePair],
    ratios: Sequence,
    seed: int,
) -> DatasetSplit:
    """Stratified pair-level split: each label class is apportioned separately.

    Both source and target artifacts stay visible to every subset; only
    the (pair, label) assignments move. Shuffling is driven solely by
    ``seed``.
    """
    fracs = normalize_ratios(ratios)
    rng = random.Random(seed)
    position = {p.key: i for i, p in enumerate(pairs)}
    subsets: tuple[list[CandidatePair], ...] = ([], [], [])

    n_active = sum(1 for f in fracs if f > 0)
    for label in (True, False):
        members = [p for p in pairs if p.label is label]
        if not members:
            continue
        if len(members) < n_active:
            warnings.warn(
                f"label class {label} has only {len(members)} member(s) for "
                f"{n_active} non-empty subsets; some subsets get none"
            )
        shuffled = members[:]
        rng.shuffle(shuffled)
        counts = allocate(len(members), fracs)
        offset = 0
        for subset, count in zip(subsets, counts):
            subset.extend(shuffled[offset : offset + count])
            offset += count

    train, val, test = (sorted(s, key=lambda p: position[p.key]) for s in subsets)
    return DatasetSplit(train, val, test, seed=seed, method="by_link", ratios=fracs)


def split_by_artifact(ds: TraceDataset, ratios: Sequence, seed: int) -> DatasetSplit:
    """Partition source artifacts; every subset sees all targets.

    Simulates linking newly arrived sources against an established
    target set, so each source id appears in exactly one subset.
    """
    fracs = normalize_ratios(ratios)
    rng = random.Random(seed)
    ids = [a.id for a in ds.sources]
    shuffled = ids[:]
    rng.shuffle(shuffled)
    counts = allocate(len(ids), fracs)
    if any(c == 0 and f > 0 for c, f in zip(counts, fracs)):
        warnings.warn(
            f"only {len(ids)} source artifact(s); some subsets with positive ratio are empty"
        )

    assignment: dict[str, int] = {}
    offset = 0
    for subset_idx, count in enumerate(counts):
        for sid in shuffled[offset : offset + count]:
            assignment[sid] = subset_idx
        offset += count

    subsets: tuple[list[CandidatePair], ...] = ([], [], [])
    for s in ds.sources:
        bucket = subsets[assignment[s.id]]
        for t in ds.targets:
            bucket.append(CandidatePair(s.id, t.id, (s.id, t.id) in ds.true_links))
    train, val, test = subsets
    return DatasetSplit(train, val, test, seed=seed, method="by_artifact", ratios=fracs)
