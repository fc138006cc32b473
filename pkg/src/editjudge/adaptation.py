"""Data-construction pipelines: retrieval prompting and preference pairs.

The retrieval index is an exact-scan cosine index (the corpus fits in
memory at target scale, so the oracle and the implementation coincide).
The preference-pair pipeline assigns a theme to each base response
round-robin, asks an LLM for an enhanced and a corrupted variant, and
pairs them under the enhanced / corrupted / hard-corrupted / blend
strategies.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .backends.base import Embedder, cosine
from .backends.remote import RemoteClient
from .backends.templates import (
    default_template,
    load_template,
    render_template,
    require_placeholders,
)
from .errors import BackendError, DatasetError, TemplateError
from .records import MessageSample
from .taxonomy import ThemeDef, ThemeTaxonomy

log = logging.getLogger(__name__)

_INDEX_MAGIC = b"EJIX"
_INDEX_VERSION = 1

PAIR_STRATEGIES = ("enhanced", "corrupted", "hard-corrupted")


@dataclass(frozen=True)
class IndexEntry:
    sample_id: str
    key_text: str
    response: str


def retrieval_key(sample: MessageSample) -> str:
    """Index key: the message and chart summary joined by one newline."""
    return f"{sample.message}\n{sample.chart_summary}"


class RetrievalIndex:
    """Exact nearest-neighbor index over embedded message+chart keys."""

    def __init__(self, entries: Sequence[IndexEntry], vectors: np.ndarray):
        entries = list(entries)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(entries):
            raise ValueError("vectors must be a (n_entries, dim) array")
        ids = [e.sample_id for e in entries]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate sample ids in retrieval index")
        self.entries = entries
        self.vectors = vectors

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        """Write ``<stem>.idx`` (vectors) and ``<stem>.meta`` (entries)."""
        stem = Path(stem)
        idx_path = stem.with_suffix(".idx")
        meta_path = stem.with_suffix(".meta")
        header = _INDEX_MAGIC + struct.pack("<IQQ", _INDEX_VERSION, len(self), self.dimension)
        _write_atomic_bytes(idx_path, header + self.vectors.tobytes(order="C"))
        meta_lines = [
            json.dumps(
                {"sample_id": e.sample_id, "key_text": e.key_text, "response": e.response},
                ensure_ascii=False,
            )
            for e in self.entries
        ]
        _write_atomic_bytes(meta_path, ("\n".join(meta_lines) + "\n").encode("utf-8"))
        return idx_path, meta_path

    @classmethod
    def load(cls, stem: str | Path) -> RetrievalIndex:
        stem = Path(stem)
        idx_path = stem.with_suffix(".idx")
        meta_path = stem.with_suffix(".meta")
        for path in (idx_path, meta_path):
            if not path.exists():
                raise DatasetError(f"{path}: index file not found")
        blob = idx_path.read_bytes()
        if blob[:4] != _INDEX_MAGIC:
            raise DatasetError(f"{idx_path}: not a retrieval index")
        version, count, dim = struct.unpack("<IQQ", blob[4:24])
        if version != _INDEX_VERSION:
            raise DatasetError(f"{idx_path}: unsupported index version {version}")
        expected = count * dim * 8
        payload = blob[24:]
        if len(payload) != expected:
            raise DatasetError(f"{idx_path}: truncated vector block")
        vectors = np.frombuffer(payload, dtype=np.float64).reshape(count, dim).copy()
        entries = []
        for lineno, line in enumerate(meta_path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{meta_path}:{lineno}: malformed entry: {exc.msg}") from exc
            entries.append(
                IndexEntry(
                    sample_id=str(obj["sample_id"]),
                    key_text=str(obj["key_text"]),
                    response=str(obj["response"]),
                )
            )
        if len(entries) != count:
            raise DatasetError(
                f"{meta_path}: entry count {len(entries)} does not match index header {count}"
            )
        return cls(entries, vectors)


def _write_atomic_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def build_index(training: Sequence[MessageSample], embedder: Embedder) -> RetrievalIndex:
    """Embed every training sample's key text; fails whole on any error."""
    if not training:
        raise DatasetError("cannot build an index from an empty training set")
    entries = [
        IndexEntry(sample_id=s.id, key_text=retrieval_key(s), response=s.response)
        for s in training
    ]
    vectors = np.stack([embedder.embed(e.key_text) for e in entries])
    return RetrievalIndex(entries, vectors)


@dataclass(frozen=True)
class Retrieved:
    entry: IndexEntry
    similarity: float


def retrieve_topk(
    index: RetrievalIndex,
    query: MessageSample,
    k: int,
    embedder: Embedder,
) -> list[Retrieved]:
    """Top-k entries by cosine similarity, descending; ties keep insertion order.

    The query's own id is excluded when present in the index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = embedder.embed(retrieval_key(query))
    if query_vec.shape[0] != index.dimension:
        raise ValueError(
            f"query embedding dimension {query_vec.shape[0]} != index dimension {index.dimension}"
        )
    scored = [
        (cosine(index.vectors[i], query_vec), i)
        for i in range(len(index))
        if index.entries[i].sample_id != query.id
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [Retrieved(entry=index.entries[i], similarity=sim) for sim, i in scored[:k]]


def _format_example(position: int, entry: IndexEntry) -> str:
    message, _, chart = entry.key_text.partition("\n")
    return (
        f"Example {position}\n"
        f"Patient message:\n{message}\n"
        f"Patient chart summary:\n{chart}\n"
        f"Clinician response:\n{entry.response}\n"
    )


def render_prompt(
    kind: str,
    sample: MessageSample,
    taxonomy: ThemeTaxonomy | None = None,
    template: str | None = None,
) -> str:
    """Render the 0-shot or thematic drafting prompt for one sample."""
    if kind == "zero_shot":
        template = template if template is not None else default_template("zero_shot")
        require_placeholders(template, {"message", "chart_summary"})
        return render_template(template, message=sample.message, chart_summary=sample.chart_summary)
    if kind == "thematic":
        if taxonomy is None:
            raise ValueError("thematic prompts need a taxonomy")
        template = template if template is not None else default_template("thematic")
        require_placeholders(template, {"message", "chart_summary", "themes"})
        themes_text = "\n".join(f"- {t.name}: {t.description}" for t in taxonomy.themes)
        return render_template(
            template,
            message=sample.message,
            chart_summary=sample.chart_summary,
            themes=themes_text,
        )
    raise ValueError(f"unknown prompt kind '{kind}'")


def build_rag_prompt(
    query: MessageSample,
    retrieved: Sequence[Retrieved | IndexEntry],
    template: str | None = None,
    zero_shot_template: str | None = None,
) -> str:
    """Retrieved examples in similarity order, then the 0-shot instruction.

    With no retrieved examples this degenerates to the 0-shot prompt.
    """
    query_prompt = render_prompt("zero_shot", query, template=zero_shot_template)
    if not retrieved:
        return query_prompt
    template = template if template is not None else default_template("rag")
    require_placeholders(template, {"examples", "query"})
    entries = [r.entry if isinstance(r, Retrieved) else r for r in retrieved]
    examples = "\n".join(_format_example(i + 1, e) for i, e in enumerate(entries))
    return render_template(template, examples=examples, query=query_prompt)


@dataclass(frozen=True)
class TadpoleTuple:
    """Enhanced / base / corrupted response triple for one theme."""

    sample_id: str
    theme: str
    enhanced: str
    base: str
    corrupted: str


@dataclass(frozen=True)
class PreferencePair:
    prompt: str
    chosen: str
    rejected: str
    strategy: str
    theme: str
    sample_id: str


class TadpoleTemplates:
    """Enhancement templates (optionally per theme) plus the corruption template."""

    def __init__(
        self,
        enhance: str | None = None,
        corrupt: str | None = None,
        per_theme_enhance: dict[str, str] | None = None,
    ):
        self.enhance = enhance if enhance is not None else default_template("enhance")
        self.corrupt = corrupt if corrupt is not None else default_template("corrupt")
        self.per_theme_enhance = dict(per_theme_enhance or {})
        for template in (self.enhance, self.corrupt, *self.per_theme_enhance.values()):
            require_placeholders(template, {"response"})

    @classmethod
    def from_dir(cls, directory: str | Path) -> TadpoleTemplates:
        """Load ``corrupt.txt``, ``enhance.txt``, and ``enhance/<theme>.txt`` overrides."""
        directory = Path(directory)
        if not directory.is_dir():
            raise TemplateError(f"{directory}: template directory not found")
        enhance = None
        corrupt = None
        if (directory / "enhance.txt").exists():
            enhance = load_template(directory / "enhance.txt")
        if (directory / "corrupt.txt").exists():
            corrupt = load_template(directory / "corrupt.txt")
        per_theme = {}
        theme_dir = directory / "enhance"
        if theme_dir.is_dir():
            for path in sorted(theme_dir.glob("*.txt")):
                per_theme[path.stem] = load_template(path)
        return cls(enhance=enhance, corrupt=corrupt, per_theme_enhance=per_theme)

    def enhance_for(self, theme: ThemeDef) -> str:
        key = theme_slug(theme.name)
        if key in self.per_theme_enhance:
            return self.per_theme_enhance[key]
        if theme.name in self.per_theme_enhance:
            return self.per_theme_enhance[theme.name]
        return self.enhance


def theme_slug(name: str) -> str:
    return "-".join(part for part in "".join(
        ch.lower() if ch.isalnum() else " " for ch in name
    ).split())


def assign_themes(count: int, taxonomy: ThemeTaxonomy) -> list[ThemeDef]:
    """Round-robin theme assignment over input order.

    Per-theme counts differ by at most one for any count.
    """
    if not taxonomy.themes:
        raise ValueError("taxonomy has no themes")
    return [taxonomy.themes[i % len(taxonomy.themes)] for i in range(count)]


def _render_tadpole_prompts(
    bases: Sequence[tuple[str, str]],
    assignments: Sequence[ThemeDef],
    templates: TadpoleTemplates,
) -> tuple[list[str], list[str]]:
    enhance_prompts = []
    corrupt_prompts = []
    for (_, base), theme in zip(bases, assignments):
        fields = {"response": base, "theme": theme.name, "description": theme.description}
        enhance_prompts.append(render_template(templates.enhance_for(theme), **fields))
        corrupt_prompts.append(render_template(templates.corrupt, **fields))
    return enhance_prompts, corrupt_prompts


def generate_tadpole_tuples(
    bases: Sequence[tuple[str, str]],
    taxonomy: ThemeTaxonomy,
    llm,
    templates: TadpoleTemplates | None = None,
) -> list[TadpoleTuple]:
    """One enhancement call and one corruption call per base response.

    ``llm`` needs a ``chat(prompt) -> str`` method; a RemoteClient runs the
    calls under its concurrency bound. Failed or empty generations drop
    the tuple with a logged reason; the run continues.
    """
    if not bases:
        raise DatasetError("no base responses provided")
    for sample_id, base in bases:
        if not base.strip():
            raise DatasetError(f"base response for '{sample_id}' is empty")
    templates = templates or TadpoleTemplates()
    assignments = assign_themes(len(bases), taxonomy)
    enhance_prompts, corrupt_prompts = _render_tadpole_prompts(bases, assignments, templates)

    if isinstance(llm, RemoteClient):
        enhanced_outputs = llm.map_chat(enhance_prompts)
        corrupted_outputs = llm.map_chat(corrupt_prompts)
    else:
        enhanced_outputs = [_call_chat(llm, p) for p in enhance_prompts]
        corrupted_outputs = [_call_chat(llm, p) for p in corrupt_prompts]

    tuples = []
    for (sample_id, base), theme, enhanced, corrupted in zip(
        bases, assignments, enhanced_outputs, corrupted_outputs
    ):
        if isinstance(enhanced, BackendError) or isinstance(corrupted, BackendError):
            reason = enhanced if isinstance(enhanced, BackendError) else corrupted
            log.warning("dropping tuple for %s (%s): %s", sample_id, theme.name, reason)
            continue
        enhanced = enhanced.strip()
        corrupted = corrupted.strip()
        if not enhanced or not corrupted:
            log.warning("dropping tuple for %s (%s): empty generation", sample_id, theme.name)
            continue
        tuples.append(
            TadpoleTuple(
                sample_id=sample_id,
                theme=theme.name,
                enhanced=enhanced,
                base=base,
                corrupted=corrupted,
            )
        )
    return tuples


def _call_chat(llm, prompt: str):
    try:
        return llm.chat(prompt)
    except BackendError as exc:
        return exc


def _blend_strategy_sizes(count: int) -> dict[str, int]:
    base, remainder = divmod(count, 3)
    sizes = {name: base for name in PAIR_STRATEGIES}
    for name in PAIR_STRATEGIES[:remainder]:
        sizes[name] += 1
    return sizes


def make_preference_pairs(
    tuples: Sequence[TadpoleTuple],
    strategy: str,
    prompt_renderer: Callable[[str], str],
    dedup: bool = False,
) -> list[PreferencePair]:
    """Turn tuples into (chosen, rejected) pairs under a strategy.

    enhanced: (enhanced, base); corrupted: (base, corrupted);
    hard-corrupted: (enhanced, corrupted); blend: in-order thirds across
    the three, remainder going enhanced -> corrupted -> hard-corrupted.
    Tuples whose chosen and rejected texts coincide are skipped.
    """
    if not tuples:
        raise DatasetError("no tuples provided")
    if strategy not in (*PAIR_STRATEGIES, "blend"):
        raise ValueError(f"unknown strategy '{strategy}'")

    if strategy == "blend":
        sizes = _blend_strategy_sizes(len(tuples))
        plan = []
        cursor = 0
        for name in PAIR_STRATEGIES:
            plan.extend((t, name) for t in tuples[cursor : cursor + sizes[name]])
            cursor += sizes[name]
    else:
        plan = [(t, strategy) for t in tuples]

    selectors = {
        "enhanced": lambda t: (t.enhanced, t.base),
        "corrupted": lambda t: (t.base, t.corrupted),
        "hard-corrupted": lambda t: (t.enhanced, t.corrupted),
    }
    pairs = []
    seen = set()
    for tup, name in plan:
        chosen, rejected = selectors[name](tup)
        if chosen == rejected:
            log.warning(
                "skipping %s pair for %s (%s): chosen equals rejected",
                name, tup.sample_id, tup.theme,
            )
            continue
        prompt = prompt_renderer(tup.sample_id)
        if dedup:
            key = (prompt, chosen, rejected)
            if key in seen:
                continue
            seen.add(key)
        pairs.append(
            PreferencePair(
                prompt=prompt,
                chosen=chosen,
                rejected=rejected,
                strategy=name,
                theme=tup.theme,
                sample_id=tup.sample_id,
            )
        )
    return pairs


def save_tuples(path: str | Path, tuples: Sequence[TadpoleTuple]) -> None:
    lines = [
        json.dumps(
            {
                "sample_id": t.sample_id,
                "theme": t.theme,
                "enhanced": t.enhanced,
                "base": t.base,
                "corrupted": t.corrupted,
            },
            ensure_ascii=False,
        )
        for t in tuples
    ]
    _write_atomic_bytes(Path(path), ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))


def load_tuples(path: str | Path) -> list[TadpoleTuple]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: tuples file not found")
    tuples = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: malformed tuple: {exc.msg}") from exc
        try:
            tuples.append(
                TadpoleTuple(
                    sample_id=str(obj["sample_id"]),
                    theme=str(obj["theme"]),
                    enhanced=str(obj["enhanced"]),
                    base=str(obj["base"]),
                    corrupted=str(obj["corrupted"]),
                )
            )
        except KeyError as exc:
            raise DatasetError(f"{path}:{lineno}: missing field {exc}") from exc
    return tuples


def save_preference_pairs(path: str | Path, pairs: Sequence[PreferencePair]) -> None:
    lines = [
        json.dumps(
            {
                "prompt": p.prompt,
                "chosen": p.chosen,
                "rejected": p.rejected,
                "strategy": p.strategy,
                "theme": p.theme,
                "sample_id": p.sample_id,
            },
            ensure_ascii=False,
        )
        for p in pairs
    ]
    _write_atomic_bytes(Path(path), ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))
