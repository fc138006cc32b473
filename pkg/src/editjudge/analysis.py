"""Inter-annotator predictability and agreement, and theme frequency.

Predictability (IAP) runs the full edit pipeline over every ordered
annotator pair, treating one clinician's response as the reference and
the other's as the draft. Agreement comes in two flavors: per-theme
strict inclusion/exclusion (unanimity across annotators) and mean
pairwise cosine similarity of response embeddings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .backends.base import Embedder, Matcher, ThemeClassifier, cosine
from .errors import DatasetError
from .metrics import (
    ZERO_COUNTS,
    EditCounts,
    PRF,
    _score_confusion,
    content_scores,
    count_edits,
    theme_confusion,
    theme_counts,
)
from .records import MultiResponseSample
from .segmenter import SentenceSegmenter
from .taxonomy import ThemeTaxonomy, load_taxonomy


@dataclass(frozen=True)
class PairScores:
    """Micro scores for one ordered (expert, draft) annotator pair."""

    expert_annotator: str
    draft_annotator: str
    comparisons: int
    counts: EditCounts
    content: PRF
    theme: PRF


@dataclass
class IapReport:
    content: PRF
    theme: PRF
    total_counts: EditCounts
    pair_count: int  # total (ordered pair, sample) comparisons
    ordered_pair_count: int  # a * (a - 1)
    annotators: list[str]
    per_pair: list[PairScores]


def _annotators_in_order(multi: Sequence[MultiResponseSample]) -> list[str]:
    ordered: list[str] = []
    for record in multi:
        for annotator, _ in record.responses:
            if annotator not in ordered:
                ordered.append(annotator)
    return ordered


def iap(
    multi: Sequence[MultiResponseSample],
    matcher: Matcher,
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter | None = None,
    taxonomy: ThemeTaxonomy | None = None,
    include_other: bool = True,
) -> IapReport:
    """Score every ordered annotator pair on every sample both answered."""
    if not multi:
        raise DatasetError("no multi-response samples provided")
    segmenter = segmenter or SentenceSegmenter()
    taxonomy = taxonomy or load_taxonomy("default")
    labels = taxonomy.labels if include_other else taxonomy.names
    annotators = _annotators_in_order(multi)
    if len(annotators) < 2:
        raise DatasetError("IAP needs at least 2 annotators")

    label_counts_cache: dict[tuple[str, str], Counter] = {}

    def counts_for(record_id: str, annotator: str, response: str) -> Counter:
        key = (record_id, annotator)
        if key not in label_counts_cache:
            counts = theme_counts(response, classifier, segmenter, taxonomy)
            if not include_other:
                counts = Counter({k: v for k, v in counts.items() if k in labels})
            label_counts_cache[key] = counts
        return label_counts_cache[key]

    total_counts = ZERO_COUNTS
    total_confusion = {label: [0, 0, 0] for label in labels}
    total_comparisons = 0
    per_pair: list[PairScores] = []

    for expert_annotator in annotators:
        for draft_annotator in annotators:
            if expert_annotator == draft_annotator:
                continue
            pair_counts = ZERO_COUNTS
            pair_confusion = {label: [0, 0, 0] for label in labels}
            comparisons = 0
            for record in multi:
                responses = dict(record.responses)
                if expert_annotator not in responses or draft_annotator not in responses:
                    continue  # missing responses are dropped, not imputed
                expert_text = responses[expert_annotator]
                draft_text = responses[draft_annotator]
                edits = count_edits(expert_text, draft_text, matcher, segmenter)
                pair_counts = pair_counts + edits.counts
                confusion = theme_confusion(
                    counts_for(record.id, expert_annotator, expert_text),
                    counts_for(record.id, draft_annotator, draft_text),
                    labels,
                )
                for label, (tp, fp, fn) in confusion.items():
                    pair_confusion[label][0] += tp
                    pair_confusion[label][1] += fp
                    pair_confusion[label][2] += fn
                comparisons += 1
            if comparisons == 0:
                continue
            pair_theme = _score_confusion({k: tuple(v) for k, v in pair_confusion.items()})
            per_pair.append(
                PairScores(
                    expert_annotator=expert_annotator,
                    draft_annotator=draft_annotator,
                    comparisons=comparisons,
                    counts=pair_counts,
                    content=content_scores(pair_counts),
                    theme=pair_theme.micro,
                )
            )
            total_counts = total_counts + pair_counts
            for label, triple in pair_confusion.items():
                total_confusion[label][0] += triple[0]
                total_confusion[label][1] += triple[1]
                total_confusion[label][2] += triple[2]
            total_comparisons += comparisons

    if total_comparisons == 0:
        raise DatasetError("no shared samples between any annotator pair")
    theme = _score_confusion({k: tuple(v) for k, v in total_confusion.items()})
    return IapReport(
        content=content_scores(total_counts),
        theme=theme.micro,
        total_counts=total_counts,
        pair_count=total_comparisons,
        ordered_pair_count=len(annotators) * (len(annotators) - 1),
        annotators=annotators,
        per_pair=per_pair,
    )


@dataclass(frozen=True)
class ThemeAgreement:
    strict_inclusion: float
    strict_exclusion: float
    strict_agreement: float


@dataclass
class StrictAgreementReport:
    per_theme: dict[str, ThemeAgreement]
    annotators: list[str]
    sample_count: int


def strict_agreement(
    multi: Sequence[MultiResponseSample],
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter | None = None,
    taxonomy: ThemeTaxonomy | None = None,
) -> StrictAgreementReport:
    """Per theme, how often all annotators unanimously include/exclude it."""
    if not multi:
        raise DatasetError("no multi-response samples provided")
    segmenter = segmenter or SentenceSegmenter()
    taxonomy = taxonomy or load_taxonomy("default")

    annotator_set = set(a for a, _ in multi[0].responses)
    for record in multi[1:]:
        record_set = set(a for a, _ in record.responses)
        if record_set != annotator_set:
            raise DatasetError(
                f"sample '{record.id}' has annotators {sorted(record_set)}, "
                f"expected {sorted(annotator_set)}"
            )

    labels = taxonomy.labels
    included_all: Counter = Counter()
    excluded_all: Counter = Counter()
    for record in multi:
        presence_per_annotator = []
        for _, response in record.responses:
            counts = theme_counts(response, classifier, segmenter, taxonomy)
            presence_per_annotator.append({label for label, n in counts.items() if n > 0})
        for label in labels:
            flags = [label in present for present in presence_per_annotator]
            if all(flags):
                included_all[label] += 1
            elif not any(flags):
                excluded_all[label] += 1

    n = len(multi)
    per_theme = {}
    for label in labels:
        inclusion = included_all[label] / n
        exclusion = excluded_all[label] / n
        per_theme[label] = ThemeAgreement(inclusion, exclusion, inclusion + exclusion)
    return StrictAgreementReport(
        per_theme=per_theme,
        annotators=_annotators_in_order(multi),
        sample_count=n,
    )


@dataclass
class CosineMatrix:
    """Mean pairwise cosine similarity between annotators' responses."""

    annotators: list[str]
    values: dict[tuple[str, str], float]  # keys stored with sorted annotators

    def value(self, a: str, b: str) -> float:
        return self.values[tuple(sorted((a, b)))]

    def as_rows(self) -> list[list[float]]:
        return [[self.value(a, b) for b in self.annotators] for a in self.annotators]


def pairwise_cosine(
    multi: Sequence[MultiResponseSample],
    embedder: Embedder,
) -> CosineMatrix:
    """Embed every response; average cosine per annotator pair over shared samples."""
    if not multi:
        raise DatasetError("no multi-response samples provided")
    annotators = _annotators_in_order(multi)
    if len(annotators) < 2:
        raise DatasetError("pairwise cosine needs at least 2 annotators")

    vectors: dict[tuple[str, str], object] = {}
    for record in multi:
        for annotator, response in record.responses:
            vectors[(record.id, annotator)] = embedder.embed(response)

    values: dict[tuple[str, str], float] = {}
    for i, a in enumerate(annotators):
        for b in annotators[i:]:
            sims = []
            for record in multi:
                key_a = (record.id, a)
                key_b = (record.id, b)
                if key_a in vectors and key_b in vectors:
                    sims.append(cosine(vectors[key_a], vectors[key_b]))
            if sims:
                values[tuple(sorted((a, b)))] = sum(sims) / len(sims)
    return CosineMatrix(annotators=annotators, values=values)


@dataclass
class ThemeFrequencyReport:
    """How often each theme occurs, by sentence and by response."""

    sentence_counts: dict[str, int]
    sentence_fractions: dict[str, float]  # sums to 1 over labels when any sentences
    response_fractions: dict[str, float]  # fraction of responses containing the theme
    total_sentences: int
    total_responses: int


def theme_frequency(
    responses: Sequence[str],
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter | None = None,
    taxonomy: ThemeTaxonomy | None = None,
) -> ThemeFrequencyReport:
    """Aggregate theme counts over a corpus of responses."""
    if not responses:
        raise DatasetError("no responses provided")
    segmenter = segmenter or SentenceSegmenter()
    taxonomy = taxonomy or load_taxonomy("default")
    labels = taxonomy.labels

    sentence_counts: Counter = Counter()
    containing: Counter = Counter()
    for response in responses:
        counts = theme_counts(response, classifier, segmenter, taxonomy)
        sentence_counts.update(counts)
        for label, n in counts.items():
            if n > 0:
                containing[label] += 1

    total_sentences = sum(sentence_counts.values())
    sentence_fractions = {
        label: (sentence_counts[label] / total_sentences if total_sentences else 0.0)
        for label in labels
    }
    response_fractions = {label: containing[label] / len(responses) for label in labels}
    return ThemeFrequencyReport(
        sentence_counts={label: sentence_counts[label] for label in labels},
        sentence_fractions=sentence_fractions,
        response_fractions=response_fractions,
        total_sentences=total_sentences,
        total_responses=len(responses),
    )
