"""Prompt rendering, demonstration attachment, and verdict parsing.

A prompt spec is assembled from up to five clauses, joined by single
spaces in a fixed order: role, domain, task (artifact declarations plus
the relation question), reasoning, answer instruction. Templates carry
``{artifact1}``, ``{artifact2}``, ``{relation}``, and ``{domain}``
slots; slot values come from the dataset's template_meta, overlaid by
the prompt's own pinned slots (catalog prompts pin their exact published
wording, the generic "template" prompt pins nothing).

Artifact texts are injected after the instruction as labeled blocks::

    <instruction>

    (1): <source text>
    (2): <target text>

Each attached demonstration repeats the block and appends its gold
answer line (``Answer: Yes`` / ``Answer: No``); the query block comes
last with no answer line.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import DataError, UnparseableVerdict

if TYPE_CHECKING:
    from .corpus import CandidatePair, TraceDataset
    from .selection import SelectionResult

SLOT_NAMES = ("domain", "artifact1", "artifact2", "relation")
_BLOCK_MARK = "\n\n(1): "


@dataclass
class PromptSpec:
    id: str
    task_template: str
    answer_instruction: str
    role_clause: str | None = None
    domain_clause_template: str | None = None
    reasoning_clause: str | None = None
    fixed_slots: dict[str, str] = field(default_factory=dict)
    max_output_tokens: int = 1

    def __post_init__(self) -> None:
        for slot in ("{artifact1}", "{artifact2}", "{relation}"):
            if slot not in self.task_template:
                raise ValueError(f"task_template of {self.id!r} is missing slot {slot}")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")


@dataclass
class RenderedPrompt:
    text: str
    demonstrations: list[tuple[str, str]]  # (rendered pair block, gold answer)
    pair_key: tuple[str, str]

    @property
    def key(self) -> str:
        return f"{self.pair_key[0]}::{self.pair_key[1]}"


@dataclass(frozen=True)
class Verdict:
    linked: bool
    raw: str


def _slot_values(spec: PromptSpec, meta: dict) -> dict[str, str]:
    values = {
        "domain": meta.get("domain"),
        "artifact1": meta.get("artifact1_name"),
        "artifact2": meta.get("artifact2_name"),
        "relation": meta.get("relation_phrase"),
    }
    values.update(spec.fixed_slots)
    return values


def _fill(template: str, values: dict[str, str], spec_id: str) -> str:
    class _Strict(dict):
        def __missing__(self, key):
            raise KeyError(key)

    try:
        filled = {k: v for k, v in values.items() if v is not None}
        return template.format_map(_Strict(filled))
    except KeyError as exc:
        raise ValueError(f"unresolved slot {exc.args[0]!r} rendering prompt {spec_id!r}") from exc


def render_instruction(spec: PromptSpec, meta: dict) -> str:
    """The instruction sentence(s) alone, without artifact texts."""
    values = _slot_values(spec, meta)
    parts = []
    if spec.role_clause:
        parts.append(spec.role_clause)
    if spec.domain_clause_template:
        parts.append(_fill(spec.domain_clause_template, values, spec.id))
    parts.append(_fill(spec.task_template, values, spec.id))
    if spec.reasoning_clause:
        parts.append(spec.reasoning_clause)
    parts.append(spec.answer_instruction)
    return " ".join(parts)


def render_prompt(spec: PromptSpec, meta: dict, source_text: str, target_text: str) -> str:
    """Deterministic zero-shot prompt body: instruction, then the labeled pair."""
    return f"{render_instruction(spec, meta)}{_BLOCK_MARK}{source_text}\n(2): {target_text}"


def _pair_block(ds: "TraceDataset", source_id: str, target_id: str) -> str:
    try:
        src = ds.source_text(source_id)
        tgt = ds.target_text(target_id)
    except KeyError as exc:
        raise DataError(f"demonstration references unknown artifact {exc.args[0]!r}") from exc
    return f"(1): {src}\n(2): {tgt}"


def attach_demonstrations(
    prompt_body: str,
    demos: "SelectionResult | None",
    ds: "TraceDataset",
    pair: "CandidatePair",
) -> RenderedPrompt:
    """Insert answered demonstration blocks between instruction and query block.

    Demonstration order is taken as-is from the selection result. With no
    demonstrations the text is the prompt body, byte for byte.
    """
    key = (pair.source_id, pair.target_id)
    if demos is None or not demos.selected:
        return RenderedPrompt(text=prompt_body, demonstrations=[], pair_key=key)

    if demos.balanced:
        counts: dict[bool, int] = {}
        for d in demos.selected:
            counts[d.pair.label] = counts.get(d.pair.label, 0) + 1
        if len(set(counts.values())) > 1 or len(demos.selected) % 2:
            warnings.warn(
                f"balanced selection has unequal label counts {counts} "
                f"({len(demos.selected)} demonstrations)"
            )

    rendered: list[tuple[str, str]] = []
    blocks: list[str] = []
    for d in demos.selected:
        block = _pair_block(ds, d.pair.source_id, d.pair.target_id)
        gold = "Yes" if d.pair.label else "No"
        rendered.append((block, gold))
        blocks.append(f"{block}\nAnswer: {gold}")

    head, sep, tail = prompt_body.partition(_BLOCK_MARK)
    if not sep:
        raise ValueError("prompt body does not contain an artifact block to attach to")
    text = head + "\n\n" + "\n\n".join(blocks) + _BLOCK_MARK + tail
    return RenderedPrompt(text=text, demonstrations=rendered, pair_key=key)


def build_prompt(
    spec: PromptSpec,
    ds: "TraceDataset",
    pair: "CandidatePair",
    demos: "SelectionResult | None" = None,
) -> RenderedPrompt:
    """Render the full prompt for one candidate pair, demonstrations included."""
    body = render_prompt(
        spec, ds.template_meta, ds.source_text(pair.source_id), ds.target_text(pair.target_id)
    )
    return attach_demonstrations(body, demos, ds, pair)


def parse_verdict(raw: str) -> Verdict:
    """Trim and case-fold; 'yes' means linked, 'no' means not linked."""
    folded = raw.strip().casefold()
    if folded == "yes":
        return Verdict(linked=True, raw=raw)
    if folded == "no":
        return Verdict(linked=False, raw=raw)
    raise UnparseableVerdict(raw)


def parse_final_verdict(raw: str) -> Verdict:
    """Read the verdict from the last token of a longer (reasoning) response."""
    tokens = raw.strip().split()
    if not tokens:
        raise UnparseableVerdict(raw)
    last = tokens[-1].strip(".,;:!?'\"()*")
    verdict = parse_verdict(last)
    return Verdict(linked=verdict.linked, raw=raw)


def load_catalog(path: str | Path | None = None) -> dict[str, PromptSpec]:
    """Load the prompt catalog (packaged file by default) keyed by prompt id."""
    if path is None:
        text = resources.files("tracekit").joinpath("data/prompts.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = json.loads(text)
    catalog: dict[str, PromptSpec] = {}
    for entry in entries:
        spec = PromptSpec(
            id=entry["id"],
            task_template=entry["task_template"],
            answer_instruction=entry["answer_instruction"],
            role_clause=entry.get("role_clause"),
            domain_clause_template=entry.get("domain_clause_template"),
            reasoning_clause=entry.get("reasoning_clause"),
            fixed_slots=entry.get("fixed_slots", {}),
            max_output_tokens=entry.get("max_output_tokens", 1),
        )
        if spec.id in catalog:
            raise DataError(f"duplicate prompt id {spec.id!r} in catalog")
        catalog[spec.id] = spec
    return catalog
