"""Content-level edit counting and theme-level scoring.

Content level: each expert sentence is judged against the full original
draft, tallying expected matches (EM) and expected additions (EA); the
matched spans are then removed from the draft once (duplicates and
overlaps merged) and the surviving sentences are expected deletions (ED).
Treating EM/ED/EA as TP/FP/FN gives precision, recall, and edit-F1.

Theme level: sentence theme labels of the draft act as predictions of the
expert response's labels; per-class true positives are min-counts over
the two label multisets, micro-averaged into the theme-level edit-F1.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .backends.base import MatchDecision, Matcher, ThemeClassifier
from .errors import BackendError, DatasetError, SpanNotFoundError
from .records import DraftRecord, MessageSample
from .segmenter import Sentence, SentenceSegmenter
from .taxonomy import OTHER_LABEL, ThemeTaxonomy, load_taxonomy
from .textutil import find_span, merge_ranges, remove_ranges

log = logging.getLogger(__name__)

ThemeCounts = Mapping[str, int]


@dataclass(frozen=True)
class EditCounts:
    """Expected matches, additions, and deletions for one draft."""

    em: int
    ea: int
    ed: int

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(self.em + other.em, self.ea + other.ea, self.ed + other.ed)


ZERO_COUNTS = EditCounts(0, 0, 0)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


ZERO_PRF = PRF(0.0, 0.0, 0.0)


def prf_from_confusion(tp: int, fp: int, fn: int) -> PRF:
    """PRF with the all-zeros convention: empty denominators score 0.

    f1 is computed as 2TP/(2TP+FP+FN), which equals the harmonic mean of
    precision and recall exactly for count inputs.
    """
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return PRF(precision, recall, f1)


def content_scores(counts: EditCounts) -> PRF:
    """EM are true positives, ED false positives, EA false negatives."""
    return prf_from_confusion(counts.em, counts.ed, counts.ea)


def aggregate_micro(counts: Iterable[EditCounts]) -> PRF:
    """Sum counts across samples, then score; order-independent."""
    total = ZERO_COUNTS
    seen = False
    for c in counts:
        total = total + c
        seen = True
    if not seen:
        raise ValueError("aggregate_micro needs at least one EditCounts")
    return content_scores(total)


@dataclass
class EditResult:
    """Edit counts plus everything needed to audit them."""

    counts: EditCounts
    expert_sentences: list[Sentence]
    decisions: list[MatchDecision]  # parallel to expert_sentences
    matched_ranges: list[tuple[int, int]]  # merged, sorted
    residual: str  # draft with matched spans removed


def count_edits(
    expert: str,
    draft: str,
    matcher: Matcher,
    segmenter: SentenceSegmenter | None = None,
) -> EditResult:
    """Count EM/EA/ED for one (expert response, draft) pair.

    Every expert sentence is matched against the full original draft;
    removal happens only after the loop, so match decisions never depend
    on one another. A Match whose span cannot be located in the draft is
    a matcher contract violation and raises SpanNotFoundError.
    """
    if not expert.strip():
        raise ValueError("expert response must be non-empty")
    segmenter = segmenter or SentenceSegmenter()
    expert_sentences = segmenter.segment(expert)
    decisions = [matcher.match_content(s.text, draft) for s in expert_sentences]
    em = sum(1 for d in decisions if d.matched)
    ea = len(expert_sentences) - em

    ranges = []
    for decision in decisions:
        if not decision.matched:
            continue
        located = find_span(draft, decision.span)
        if located is None:
            raise SpanNotFoundError(
                f"match span not present in draft: {decision.span!r}"
            )
        ranges.append(located)
    merged = merge_ranges(ranges)
    residual = remove_ranges(draft, merged)
    ed = len(segmenter.segment(residual))

    counts = EditCounts(em=em, ea=ea, ed=ed)
    assert counts.em + counts.ea == len(expert_sentences)
    return EditResult(counts, expert_sentences, decisions, merged, residual)


def theme_counts(
    response: str,
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter,
    taxonomy: ThemeTaxonomy,
) -> Counter:
    """Label multiset over the response's sentences."""
    counts: Counter = Counter()
    for sentence in segmenter.segment(response):
        counts[classifier.classify_theme(sentence.text, taxonomy)] += 1
    return counts


def _check_label_space(counts: ThemeCounts, labels: Sequence[str], side: str) -> None:
    unknown = set(counts) - set(labels)
    if unknown:
        raise ValueError(f"{side} counts contain labels outside the taxonomy: {sorted(unknown)}")


def theme_confusion(
    expert_counts: ThemeCounts,
    draft_counts: ThemeCounts,
    labels: Sequence[str],
) -> dict[str, tuple[int, int, int]]:
    """Per-label (tp, fp, fn) from min-count multiset overlap."""
    _check_label_space(expert_counts, labels, "expert")
    _check_label_space(draft_counts, labels, "draft")
    confusion = {}
    for label in labels:
        expert_n = expert_counts.get(label, 0)
        draft_n = draft_counts.get(label, 0)
        tp = min(expert_n, draft_n)
        confusion[label] = (tp, draft_n - tp, expert_n - tp)
    return confusion


@dataclass(frozen=True)
class ThemeScores:
    micro: PRF
    per_class: dict[str, PRF]


def _score_confusion(confusion: Mapping[str, tuple[int, int, int]]) -> ThemeScores:
    tp = sum(c[0] for c in confusion.values())
    fp = sum(c[1] for c in confusion.values())
    fn = sum(c[2] for c in confusion.values())
    per_class = {label: prf_from_confusion(*c) for label, c in confusion.items()}
    return ThemeScores(micro=prf_from_confusion(tp, fp, fn), per_class=per_class)


def theme_edit_scores(
    expert_counts: ThemeCounts,
    draft_counts: ThemeCounts,
    taxonomy: ThemeTaxonomy,
    include_other: bool = True,
) -> ThemeScores:
    """Micro and per-class PRF treating draft labels as predictions."""
    labels = taxonomy.labels if include_other else taxonomy.names
    return _score_confusion(theme_confusion(expert_counts, draft_counts, labels))


@dataclass
class SampleEvaluation:
    """Per-(sample, draft) row of a score report."""

    sample_id: str
    model: str
    adaptation: str
    counts: EditCounts | None = None
    content: PRF | None = None
    theme: PRF | None = None
    expert_sentence_count: int = 0
    draft_sentence_count: int = 0
    error: str | None = None


@dataclass(frozen=True)
class ModelSummary:
    model: str
    sample_count: int
    counts: EditCounts
    content: PRF
    theme: PRF


@dataclass
class ScoreReport:
    content_micro: PRF
    total_counts: EditCounts
    theme_micro: PRF
    theme_per_class: dict[str, PRF]
    content_recall_per_theme: dict[str, float]
    rows: list[SampleEvaluation]
    errored: list[SampleEvaluation]
    sample_count: int  # evaluated pairs, excluding errored
    labels: list[str] = field(default_factory=list)
    per_model: list[ModelSummary] = field(default_factory=list)


@dataclass
class _PairOutcome:
    row: SampleEvaluation
    confusion: dict[str, tuple[int, int, int]] | None = None
    expert_labels: list[str] | None = None  # parallel to expert sentences
    matched_flags: list[bool] | None = None


def _presence(counts: Counter) -> Counter:
    return Counter({label: 1 for label, n in counts.items() if n > 0})


def _evaluate_pair(
    sample: MessageSample,
    draft: DraftRecord,
    matcher: Matcher,
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter,
    taxonomy: ThemeTaxonomy,
    include_other: bool,
    theme_presence: bool,
) -> _PairOutcome:
    row = SampleEvaluation(sample_id=sample.id, model=draft.model, adaptation=draft.adaptation)
    try:
        edits = count_edits(sample.response, draft.draft, matcher, segmenter)
        expert_labels = [
            classifier.classify_theme(s.text, taxonomy) for s in edits.expert_sentences
        ]
        expert_counts = Counter(expert_labels)
        draft_sentences = segmenter.segment(draft.draft)
        draft_counts = Counter(
            classifier.classify_theme(s.text, taxonomy) for s in draft_sentences
        )
    except BackendError as exc:
        row.error = str(exc)
        return _PairOutcome(row=row)

    if theme_presence:
        expert_counts = _presence(expert_counts)
        draft_counts = _presence(draft_counts)
    labels = taxonomy.labels if include_other else taxonomy.names
    if not include_other:
        expert_counts = Counter({k: v for k, v in expert_counts.items() if k != OTHER_LABEL})
        draft_counts = Counter({k: v for k, v in draft_counts.items() if k != OTHER_LABEL})
    confusion = theme_confusion(expert_counts, draft_counts, labels)

    row.counts = edits.counts
    row.content = content_scores(edits.counts)
    row.theme = _score_confusion(confusion).micro
    row.expert_sentence_count = len(edits.expert_sentences)
    row.draft_sentence_count = len(draft_sentences)
    return _PairOutcome(
        row=row,
        confusion=confusion,
        expert_labels=expert_labels,
        matched_flags=[d.matched for d in edits.decisions],
    )


def _recall_by_theme(outcomes: Iterable[_PairOutcome]) -> dict[str, float]:
    matched: Counter = Counter()
    totals: Counter = Counter()
    for outcome in outcomes:
        if outcome.expert_labels is None:
            continue
        for label, flag in zip(outcome.expert_labels, outcome.matched_flags):
            totals[label] += 1
            if flag:
                matched[label] += 1
    # themes absent from every expert response are omitted, not reported as 0
    return {label: matched[label] / totals[label] for label in totals}


def join_drafts(
    samples: Sequence[MessageSample], drafts: Sequence[DraftRecord]
) -> list[tuple[MessageSample, DraftRecord]]:
    """Pair each draft with its sample; any unjoined draft id is an error."""
    if not samples:
        raise DatasetError("no samples provided")
    if not drafts:
        raise DatasetError("no drafts provided")
    by_id = {s.id: s for s in samples}
    missing = sorted({d.sample_id for d in drafts if d.sample_id not in by_id})
    if missing:
        raise DatasetError(f"drafts reference unknown sample ids: {missing}")
    return [(by_id[d.sample_id], d) for d in drafts]


def evaluate_dataset(
    samples: Sequence[MessageSample],
    drafts: Sequence[DraftRecord],
    matcher: Matcher,
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter | None = None,
    taxonomy: ThemeTaxonomy | None = None,
    include_other: bool = True,
    theme_presence: bool = False,
    max_workers: int = 1,
) -> ScoreReport:
    """Score every (sample, draft) pair and micro-aggregate.

    Errored pairs (backend failures) are excluded from the micro sums and
    reported separately; if every pair errors the run has produced
    nothing and raises BackendError. Per-pair work can run on
    ``max_workers`` threads (backends must be concurrency-safe; both
    baselines and the remote client are); results are reassembled in
    input order so aggregation stays deterministic.
    """
    segmenter = segmenter or SentenceSegmenter()
    taxonomy = taxonomy or load_taxonomy("default")
    pairs = join_drafts(samples, drafts)

    def work(pair: tuple[MessageSample, DraftRecord]) -> _PairOutcome:
        sample, draft = pair
        return _evaluate_pair(
            sample, draft, matcher, classifier, segmenter, taxonomy, include_other, theme_presence
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(work, pairs))
    else:
        outcomes = [work(pair) for pair in pairs]
    good = [o for o in outcomes if o.row.error is None]
    errored = [o.row for o in outcomes if o.row.error is not None]
    for row in errored:
        log.warning("sample %s errored: %s", row.sample_id, row.error)
    if not good:
        raise BackendError("all samples errored; no scores to report")

    total_counts = ZERO_COUNTS
    for outcome in good:
        total_counts = total_counts + outcome.row.counts

    labels = taxonomy.labels if include_other else taxonomy.names
    summed = {label: [0, 0, 0] for label in labels}
    for outcome in good:
        for label, (tp, fp, fn) in outcome.confusion.items():
            summed[label][0] += tp
            summed[label][1] += fp
            summed[label][2] += fn
    theme_totals = {label: tuple(v) for label, v in summed.items()}
    theme = _score_confusion(theme_totals)

    per_model = []
    model_order = []
    for outcome in good:
        if outcome.row.model not in model_order:
            model_order.append(outcome.row.model)
    for model in model_order:
        group = [o for o in good if o.row.model == model]
        counts = ZERO_COUNTS
        group_confusion = {label: [0, 0, 0] for label in labels}
        for outcome in group:
            counts = counts + outcome.row.counts
            for label, (tp, fp, fn) in outcome.confusion.items():
                group_confusion[label][0] += tp
                group_confusion[label][1] += fp
                group_confusion[label][2] += fn
        group_theme = _score_confusion({k: tuple(v) for k, v in group_confusion.items()})
        per_model.append(
            ModelSummary(
                model=model,
                sample_count=len(group),
                counts=counts,
                content=content_scores(counts),
                theme=group_theme.micro,
            )
        )

    return ScoreReport(
        content_micro=content_scores(total_counts),
        total_counts=total_counts,
        theme_micro=theme.micro,
        theme_per_class=theme.per_class,
        content_recall_per_theme=_recall_by_theme(good),
        rows=[o.row for o in outcomes],
        errored=errored,
        sample_count=len(good),
        labels=list(labels),
        per_model=per_model,
    )


def classwise_content_recall(
    samples: Sequence[MessageSample],
    drafts: Sequence[DraftRecord],
    matcher: Matcher,
    classifier: ThemeClassifier,
    segmenter: SentenceSegmenter | None = None,
    taxonomy: ThemeTaxonomy | None = None,
) -> dict[str, float]:
    """Recall of theme-labeled expert content: matched / total per theme."""
    segmenter = segmenter or SentenceSegmenter()
    taxonomy = taxonomy or load_taxonomy("default")
    pairs = join_drafts(samples, drafts)
    outcomes = [
        _evaluate_pair(sample, draft, matcher, classifier, segmenter, taxonomy, True, False)
        for sample, draft in pairs
    ]
    return _recall_by_theme(o for o in outcomes if o.row.error is None)
