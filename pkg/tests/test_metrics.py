from __future__ import annotations

import random
from collections import Counter

import pytest

from editjudge import (
    DatasetError,
    DraftRecord,
    EditCounts,
    MessageSample,
    aggregate_micro,
    classwise_content_recall,
    content_scores,
    count_edits,
    evaluate_dataset,
    theme_counts,
    theme_edit_scores,
)
from editjudge.errors import BackendError
from editjudge.metrics import join_drafts
from editjudge.textutil import find_span, merge_ranges, remove_ranges


# --- independent brute-force reference for the edit-counting algorithm ------


def brute_force_counts(expert, draft, matcher, segmenter):
    """Reference: enumerate expert sentences, match, remove spans, recount."""
    expert_sentences = segmenter.segment(expert)
    em = 0
    ea = 0
    spans = []
    for sentence in expert_sentences:
        decision = matcher.match_content(sentence.text, draft)
        if decision.matched:
            em += 1
            start = draft.find(decision.span)
            assert start >= 0
            spans.append((start, start + len(decision.span)))
        else:
            ea += 1
    # remove merged spans, then recount surviving sentences
    spans = sorted(set(spans))
    merged = []
    for start, end in spans:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    residual = ""
    cursor = 0
    for start, end in merged:
        residual += draft[cursor:start]
        cursor = end
    residual += draft[cursor:]
    ed = len(segmenter.segment(residual))
    return EditCounts(em=em, ea=ea, ed=ed)


# --- content-level scores ----------------------------------------------------


def test_content_scores_hand_example():
    prf = content_scores(EditCounts(em=2, ea=3, ed=1))
    assert prf.precision == 2 / 3
    assert prf.recall == 2 / 5
    assert prf.f1 == 0.5


def test_content_scores_zero_case():
    prf = content_scores(EditCounts(em=0, ea=5, ed=3))
    assert (prf.precision, prf.recall, prf.f1) == (0.0, 0.0, 0.0)


def test_content_scores_identity_case():
    prf = content_scores(EditCounts(em=7, ea=0, ed=0))
    assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)


def test_aggregate_micro_hand_example():
    prf = aggregate_micro([EditCounts(1, 1, 0), EditCounts(1, 0, 2)])
    assert prf.precision == 0.5
    assert prf.recall == 2 / 3
    assert prf.f1 == pytest.approx(4 / 7, abs=1e-12)


def test_aggregate_micro_scale_invariance():
    counts = EditCounts(3, 2, 1)
    once = aggregate_micro([counts])
    many = aggregate_micro([counts] * 7)
    assert once == many == content_scores(counts)


def test_aggregate_micro_empty_errors():
    with pytest.raises(ValueError):
        aggregate_micro([])


def test_f1_identity_formula():
    rng = random.Random(11)
    for _ in range(200):
        em, ea, ed = rng.randrange(0, 30), rng.randrange(0, 30), rng.randrange(0, 30)
        prf = content_scores(EditCounts(em, ea, ed))
        denominator = 2 * em + ea + ed
        expected = 2 * em / denominator if denominator else 0.0
        assert prf.f1 == pytest.approx(expected, abs=1e-12)
        if prf.precision + prf.recall > 0:
            harmonic = 2 * prf.precision * prf.recall / (prf.precision + prf.recall)
            assert prf.f1 == pytest.approx(harmonic, abs=1e-12)


# --- count_edits -------------------------------------------------------------


def test_identical_draft(matcher, segmenter):
    text = "Thanks for writing. Please rest today. Call if anything changes."
    result = count_edits(text, text, matcher, segmenter)
    assert result.counts == EditCounts(em=3, ea=0, ed=0)
    assert result.residual.strip(" .") == ""


def test_disjoint_draft(matcher, segmenter):
    expert = (
        "alpha one two. beta three four. gamma five six. delta seven eight. epsilon nine ten."
    )
    draft = "zulu aa bb. yankee cc dd. xray ee ff."
    result = count_edits(expert, draft, matcher, segmenter)
    assert result.counts == EditCounts(em=0, ea=5, ed=3)


def test_partial_match_brute_force(matcher, segmenter):
    expert = "alpha one two. beta three four. gamma five six."
    draft = "beta three four. omega seven. alpha one two. psi eight nine."
    result = count_edits(expert, draft, matcher, segmenter)
    assert result.counts == EditCounts(em=2, ea=1, ed=2)
    assert result.counts == brute_force_counts(expert, draft, matcher, segmenter)


def test_duplicate_matches_counted_but_removed_once(matcher, segmenter):
    expert = "Drink plenty of fluids. Drink plenty of fluids. Rest well tonight."
    draft = "Drink plenty of fluids. Check back next week."
    result = count_edits(expert, draft, matcher, segmenter)
    # both expert sentences tally EM; the span is removed a single time
    assert result.counts == EditCounts(em=2, ea=1, ed=1)
    assert len(result.matched_ranges) == 1


def test_match_against_full_draft_not_reduced(matcher, segmenter):
    # two expert sentences matching the same draft sentence proves each
    # decision sees the original draft, not a progressively reduced one
    expert = "alpha beta gamma. alpha beta delta."
    draft = "alpha beta gamma delta extra."
    result = count_edits(expert, draft, matcher, segmenter)
    assert result.counts.em == 2


def test_empty_expert_rejected(matcher, segmenter):
    with pytest.raises(ValueError):
        count_edits("   ", "draft.", matcher, segmenter)


def test_em_plus_ea_equals_expert_sentences_randomized(matcher, segmenter):
    rng = random.Random(23)
    for _ in range(150):
        n_expert = rng.randrange(1, 7)
        n_draft = rng.randrange(0, 7)
        expert_pool = [f"expert{i}a expert{i}b expert{i}c." for i in range(n_expert)]
        draft_pool = [
            rng.choice(expert_pool) if rng.random() < 0.5 else f"draft{j}x draft{j}y."
            for j in range(n_draft)
        ]
        expert = " ".join(expert_pool)
        draft = " ".join(draft_pool) if draft_pool else "placeholder zz."
        result = count_edits(expert, draft, matcher, segmenter)
        assert result.counts.em + result.counts.ea == len(result.expert_sentences)
        assert result.counts.ed <= len(segmenter.segment(draft))
        assert result.counts == brute_force_counts(expert, draft, matcher, segmenter)


def test_reordering_exact_copies_leaves_counts_unchanged(matcher, segmenter):
    expert = "alpha one two. beta three four. gamma five six."
    draft_a = "alpha one two. omega seven eight. beta three four."
    draft_b = "beta three four. alpha one two. omega seven eight."
    a = count_edits(expert, draft_a, matcher, segmenter).counts
    b = count_edits(expert, draft_b, matcher, segmenter).counts
    assert a == b


# --- theme level -------------------------------------------------------------


def test_theme_counts_total_equals_sentences(classifier, segmenter, taxonomy):
    response = "Have you noticed any fever or chills? Our office hours are online. qqq zzz."
    counts = theme_counts(response, classifier, segmenter, taxonomy)
    assert sum(counts.values()) == 3
    assert counts["Symptom-Related Follow-Up Question"] == 1
    assert counts["Other"] == 1


def test_theme_counts_empty_response(classifier, segmenter, taxonomy):
    assert theme_counts("...", classifier, segmenter, taxonomy) == Counter()


def test_theme_edit_scores_hand_example(taxonomy):
    empathy, symptom = taxonomy.labels[0], taxonomy.labels[1]
    logistics = taxonomy.labels[7]
    expert = Counter({empathy: 1, symptom: 2})
    draft = Counter({empathy: 1, symptom: 1, logistics: 1})
    scores = theme_edit_scores(expert, draft, taxonomy)
    assert scores.micro.precision == pytest.approx(2 / 3)
    assert scores.micro.recall == pytest.approx(2 / 3)
    assert scores.micro.f1 == pytest.approx(2 / 3)
    assert scores.per_class[symptom].recall == pytest.approx(0.5)


def test_theme_edit_scores_identity(taxonomy):
    counts = Counter({taxonomy.labels[0]: 2, taxonomy.labels[3]: 1})
    scores = theme_edit_scores(counts, counts, taxonomy)
    assert scores.micro.f1 == 1.0


def test_theme_edit_scores_disjoint(taxonomy):
    a = Counter({taxonomy.labels[0]: 2})
    b = Counter({taxonomy.labels[1]: 3})
    assert theme_edit_scores(a, b, taxonomy).micro.f1 == 0.0


def test_theme_swap_exchanges_precision_and_recall(taxonomy):
    rng = random.Random(5)
    labels = taxonomy.labels
    for _ in range(100):
        expert = Counter({label: rng.randrange(0, 4) for label in labels})
        draft = Counter({label: rng.randrange(0, 4) for label in labels})
        forward = theme_edit_scores(expert, draft, taxonomy).micro
        backward = theme_edit_scores(draft, expert, taxonomy).micro
        assert forward.precision == backward.recall
        assert forward.recall == backward.precision
        assert forward.f1 == backward.f1


def test_theme_label_space_mismatch_errors(taxonomy):
    with pytest.raises(ValueError, match="outside the taxonomy"):
        theme_edit_scores(Counter({"Nonexistent": 1}), Counter(), taxonomy)


def test_exclude_other_flag(taxonomy):
    expert = Counter({"Other": 3})
    draft = Counter({"Other": 3})
    included = theme_edit_scores(expert, draft, taxonomy, include_other=True)
    assert included.micro.f1 == 1.0
    excluded = theme_edit_scores(Counter(), Counter(), taxonomy, include_other=False)
    assert excluded.micro.f1 == 0.0
    with pytest.raises(ValueError):
        theme_edit_scores(expert, draft, taxonomy, include_other=False)


# --- dataset evaluation ------------------------------------------------------


def _mk_samples_drafts():
    samples = [
        MessageSample("s1", "msg", "chart", "Have you noticed any fever or chills? Any pain today?"),
        MessageSample("s2", "msg", "chart", "Our office hours are posted online. Please call the front desk."),
    ]
    drafts = [
        DraftRecord("s1", samples[0].response, "m1", "0-shot"),
        DraftRecord("s2", samples[1].response, "m1", "0-shot"),
    ]
    return samples, drafts


def test_identity_dataset_scores_one(matcher, classifier, segmenter, taxonomy):
    samples, drafts = _mk_samples_drafts()
    report = evaluate_dataset(samples, drafts, matcher, classifier, segmenter, taxonomy)
    assert report.content_micro.f1 == 1.0
    assert report.theme_micro.f1 == 1.0
    assert report.sample_count == 2
    assert not report.errored


def test_unjoined_draft_errors(matcher, classifier, segmenter, taxonomy):
    samples, drafts = _mk_samples_drafts()
    drafts.append(DraftRecord("missing", "text.", "m1", "0-shot"))
    with pytest.raises(DatasetError, match="missing"):
        evaluate_dataset(samples, drafts, matcher, classifier, segmenter, taxonomy)


def test_empty_inputs_error(matcher, classifier):
    with pytest.raises(DatasetError):
        join_drafts([], [])
    samples, _ = _mk_samples_drafts()
    with pytest.raises(DatasetError):
        join_drafts(samples, [])


class ExplodingMatcher:
    def __init__(self, fail_ids):
        self.fail_ids = fail_ids

    def match_content(self, expert_sentence, draft):
        if any(token in draft for token in self.fail_ids):
            raise BackendError("synthetic failure")
        from editjudge import MatchDecision

        return MatchDecision.match(draft)


def test_errored_samples_excluded_from_micro(classifier, segmenter, taxonomy):
    samples = [
        MessageSample("s1", "m", "c", "alpha one."),
        MessageSample("s2", "m", "c", "beta two."),
    ]
    drafts = [
        DraftRecord("s1", "alpha one.", "m1", "x"),
        DraftRecord("s2", "FAILTOKEN beta two.", "m1", "x"),
    ]
    report = evaluate_dataset(
        samples, drafts, ExplodingMatcher(["FAILTOKEN"]), classifier, segmenter, taxonomy
    )
    assert report.sample_count == 1
    assert len(report.errored) == 1
    assert report.errored[0].sample_id == "s2"


def test_all_errored_raises(classifier, segmenter, taxonomy):
    samples = [MessageSample("s1", "m", "c", "alpha one.")]
    drafts = [DraftRecord("s1", "FAILTOKEN.", "m1", "x")]
    with pytest.raises(BackendError, match="all samples"):
        evaluate_dataset(
            samples, drafts, ExplodingMatcher(["FAILTOKEN"]), classifier, segmenter, taxonomy
        )


def test_classwise_content_recall(matcher, classifier, segmenter, taxonomy):
    # expert mixes a matched symptom question with an unmatched logistics line
    samples = [
        MessageSample(
            "s1", "m", "c",
            "Have you noticed any fever or chills? Our office hours are posted online.",
        )
    ]
    drafts = [DraftRecord("s1", "Have you noticed any fever or chills?", "m1", "x")]
    recall = classwise_content_recall(samples, drafts, matcher, classifier, segmenter, taxonomy)
    assert recall["Symptom-Related Follow-Up Question"] == 1.0
    assert recall["Logistical Information"] == 0.0
    # themes absent from expert responses are omitted entirely
    assert "Medical Treatment" not in recall


def test_parallel_evaluation_matches_sequential(matcher, classifier, segmenter, taxonomy):
    samples, drafts = _mk_samples_drafts()
    sequential = evaluate_dataset(samples, drafts, matcher, classifier, segmenter, taxonomy)
    parallel = evaluate_dataset(
        samples, drafts, matcher, classifier, segmenter, taxonomy, max_workers=4
    )
    assert sequential.content_micro == parallel.content_micro
    assert sequential.theme_micro == parallel.theme_micro
    assert [r.sample_id for r in sequential.rows] == [r.sample_id for r in parallel.rows]


def test_theme_presence_switches_to_set_semantics(matcher, classifier, segmenter, taxonomy):
    # expert repeats a symptom question twice; the draft has it once --
    # count semantics penalize recall, presence semantics do not
    samples = [
        MessageSample(
            "s1", "m", "c",
            "Have you noticed any fever? Have you noticed any chills recently today?",
        )
    ]
    drafts = [DraftRecord("s1", "Have you noticed any fever?", "m1", "x")]
    counted = evaluate_dataset(samples, drafts, matcher, classifier, segmenter, taxonomy)
    presence = evaluate_dataset(
        samples, drafts, matcher, classifier, segmenter, taxonomy, theme_presence=True
    )
    assert counted.theme_micro.recall == pytest.approx(0.5)
    assert presence.theme_micro.recall == pytest.approx(1.0)


def test_per_model_summaries(matcher, classifier, segmenter, taxonomy):
    samples, _ = _mk_samples_drafts()
    drafts = [
        DraftRecord("s1", samples[0].response, "model-a", "x"),
        DraftRecord("s2", samples[1].response, "model-a", "x"),
        DraftRecord("s1", "zz yy unrelated mash.", "model-b", "x"),
    ]
    report = evaluate_dataset(samples, drafts, matcher, classifier, segmenter, taxonomy)
    models = {m.model: m for m in report.per_model}
    assert models["model-a"].content.f1 == 1.0
    assert models["model-b"].content.f1 == 0.0
    assert models["model-a"].sample_count == 2


# --- span helpers ------------------------------------------------------------


def test_find_span_prefers_exact():
    assert find_span("aa bb cc", "bb") == (3, 5)
    assert find_span("aa  bb", "aa bb") == (0, 6)
    assert find_span("aa bb", "zz") is None


def test_merge_and_remove_ranges():
    assert merge_ranges([(5, 9), (0, 3), (2, 4)]) == [(0, 4), (5, 9)]
    assert remove_ranges("0123456789", [(0, 4), (5, 9)]) == "49"
