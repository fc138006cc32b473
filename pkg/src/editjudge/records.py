"""Dataset records: JSONL loading, validation, and serialization.

One JSON object per line. Loading is all-or-nothing: the first invariant
violation rejects the whole file with a message naming the line. Text
fields are trimmed and line endings normalized at load; nothing else is
mutated, so judge spans stay verbatim substrings of their drafts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .backends.base import NO_MATCH, NO_MATCH_TOKEN, MatchDecision
from .errors import DatasetError

DATASET_KINDS = ("single-response", "multi-response", "drafts", "judge-annotations")


@dataclass(frozen=True)
class MessageSample:
    """One patient message, chart summary, and clinician response."""

    id: str
    message: str
    chart_summary: str
    response: str
    annotator_id: str | None = None


@dataclass(frozen=True)
class DraftRecord:
    """An LLM response draft tied to a sample, tagged by model and adaptation."""

    sample_id: str
    draft: str
    model: str
    adaptation: str


@dataclass(frozen=True)
class MultiResponseSample:
    """One message answered independently by several annotators."""

    id: str
    message: str
    chart_summary: str
    responses: tuple[tuple[str, str], ...]  # (annotator_id, response)


@dataclass(frozen=True)
class JudgeAnnotation:
    """Gold matching decision for one (expert sentence, draft) pair."""

    expert_sentence: str
    draft: str
    gold: MatchDecision


def clean_text(text: str) -> str:
    """Normalize line endings and trim; the only mutation applied at load."""
    return text.replace("\r\n", "\n").replace("\r", "\n").strip()


def _iter_records(path: Path) -> Iterator[tuple[int, dict]]:
    if not path.exists():
        raise DatasetError(f"{path}: file not found")
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed record: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{lineno}: record is not an object")
            yield lineno, obj


def _get_str(obj: dict, key: str, path: Path, lineno: int, required_nonempty: bool = True) -> str:
    if key not in obj:
        raise DatasetError(f"{path}:{lineno}: missing field '{key}'")
    value = obj[key]
    if not isinstance(value, str):
        raise DatasetError(f"{path}:{lineno}: field '{key}' must be a string")
    value = clean_text(value)
    if required_nonempty and not value:
        raise DatasetError(f"{path}:{lineno}: field '{key}' is empty")
    return value


def load_samples(path: str | Path) -> list[MessageSample]:
    path = Path(path)
    samples = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_records(path):
        sample_id = _get_str(obj, "id", path, lineno)
        if sample_id in seen:
            raise DatasetError(
                f"{path}:{lineno}: duplicate id '{sample_id}' (first seen on line {seen[sample_id]})"
            )
        seen[sample_id] = lineno
        annotator = None
        if obj.get("annotator_id") is not None:
            annotator = _get_str(obj, "annotator_id", path, lineno)
        samples.append(
            MessageSample(
                id=sample_id,
                message=_get_str(obj, "message", path, lineno),
                chart_summary=_get_str(obj, "chart_summary", path, lineno, required_nonempty=False),
                response=_get_str(obj, "response", path, lineno),
                annotator_id=annotator,
            )
        )
    return samples


def load_drafts(path: str | Path) -> list[DraftRecord]:
    path = Path(path)
    drafts = []
    for lineno, obj in _iter_records(path):
        drafts.append(
            DraftRecord(
                sample_id=_get_str(obj, "sample_id", path, lineno),
                draft=_get_str(obj, "draft", path, lineno),
                model=_get_str(obj, "model", path, lineno, required_nonempty=False),
                adaptation=_get_str(obj, "adaptation", path, lineno, required_nonempty=False),
            )
        )
    return drafts


def load_multi_response(path: str | Path) -> list[MultiResponseSample]:
    path = Path(path)
    records = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_records(path):
        sample_id = _get_str(obj, "id", path, lineno)
        if sample_id in seen:
            raise DatasetError(
                f"{path}:{lineno}: duplicate id '{sample_id}' (first seen on line {seen[sample_id]})"
            )
        seen[sample_id] = lineno
        raw = obj.get("responses")
        if not isinstance(raw, list):
            raise DatasetError(f"{path}:{lineno}: field 'responses' must be a list")
        responses = []
        for item in raw:
            if not isinstance(item, dict):
                raise DatasetError(f"{path}:{lineno}: each response must be an object")
            annotator = _get_str(item, "annotator_id", path, lineno)
            response = _get_str(item, "response", path, lineno)
            responses.append((annotator, response))
        annotators = [a for a, _ in responses]
        if len(set(annotators)) < 2:
            raise DatasetError(f"{path}:{lineno}: need at least 2 distinct annotator_ids")
        if len(set(annotators)) != len(annotators):
            raise DatasetError(f"{path}:{lineno}: duplicate annotator_id within record")
        records.append(
            MultiResponseSample(
                id=sample_id,
                message=_get_str(obj, "message", path, lineno),
                chart_summary=_get_str(obj, "chart_summary", path, lineno, required_nonempty=False),
                responses=tuple(responses),
            )
        )
    return records


def load_judge_annotations(path: str | Path) -> list[JudgeAnnotation]:
    path = Path(path)
    annotations = []
    for lineno, obj in _iter_records(path):
        expert_sentence = _get_str(obj, "expert_sentence", path, lineno)
        draft = _get_str(obj, "draft", path, lineno)
        gold_raw = _get_str(obj, "gold", path, lineno)
        if gold_raw == NO_MATCH_TOKEN:
            gold = NO_MATCH
        else:
            if gold_raw not in draft:
                raise DatasetError(
                    f"{path}:{lineno}: gold span is not a verbatim substring of the draft"
                )
            gold = MatchDecision.match(gold_raw)
        annotations.append(JudgeAnnotation(expert_sentence, draft, gold))
    return annotations


def load_dataset(path: str | Path, kind: str):
    """Load a dataset file of the declared kind; see DATASET_KINDS."""
    loaders = {
        "single-response": load_samples,
        "multi-response": load_multi_response,
        "drafts": load_drafts,
        "judge-annotations": load_judge_annotations,
    }
    if kind not in loaders:
        raise DatasetError(f"unknown dataset kind '{kind}' (expected one of {DATASET_KINDS})")
    return loaders[kind](path)


def _dump_lines(path: Path, objects: list[dict]) -> None:
    lines = [json.dumps(obj, ensure_ascii=False) for obj in objects]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def save_samples(path: str | Path, samples: list[MessageSample]) -> None:
    objs = []
    for s in samples:
        obj = {
            "id": s.id,
            "message": s.message,
            "chart_summary": s.chart_summary,
            "response": s.response,
        }
        if s.annotator_id is not None:
            obj["annotator_id"] = s.annotator_id
        objs.append(obj)
    _dump_lines(Path(path), objs)


def save_drafts(path: str | Path, drafts: list[DraftRecord]) -> None:
    _dump_lines(
        Path(path),
        [
            {"sample_id": d.sample_id, "draft": d.draft, "model": d.model, "adaptation": d.adaptation}
            for d in drafts
        ],
    )


def save_multi_response(path: str | Path, records: list[MultiResponseSample]) -> None:
    _dump_lines(
        Path(path),
        [
            {
                "id": r.id,
                "message": r.message,
                "chart_summary": r.chart_summary,
                "responses": [
                    {"annotator_id": a, "response": text} for a, text in r.responses
                ],
            }
            for r in records
        ],
    )


def save_judge_annotations(path: str | Path, annotations: list[JudgeAnnotation]) -> None:
    _dump_lines(
        Path(path),
        [
            {
                "expert_sentence": a.expert_sentence,
                "draft": a.draft,
                "gold": a.gold.span if a.gold.matched else NO_MATCH_TOKEN,
            }
            for a in annotations
        ],
    )
