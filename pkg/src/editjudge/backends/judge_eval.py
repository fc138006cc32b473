"""Scoring a matcher against gold span annotations.

Four metrics, per the judge evaluation protocol:
  agreement            correct Match / NO MATCH decision, all samples
  non_match_agreement  gold NO MATCH cases judged NO MATCH
  match_agreement      gold Match cases whose span is reproduced exactly
  match_overlap        gold Match cases whose spans share any characters
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from ..errors import DatasetError
from ..textutil import find_span
from .base import Matcher

if TYPE_CHECKING:
    from ..records import JudgeAnnotation


@dataclass(frozen=True)
class JudgeEvalReport:
    agreement: float
    non_match_agreement: float
    match_agreement: float
    match_overlap: float
    n: int


def _fraction(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def _overlaps(draft: str, predicted_span: str, gold_span: str) -> bool:
    gold_start = draft.find(gold_span)
    if gold_start < 0:
        return False
    predicted = find_span(draft, predicted_span)
    if predicted is None:
        return False
    start, end = predicted
    return start < gold_start + len(gold_span) and gold_start < end


def evaluate_matcher(annotations: Sequence["JudgeAnnotation"], matcher: Matcher) -> JudgeEvalReport:
    if not annotations:
        raise DatasetError("cannot evaluate a matcher on an empty annotation list")
    correct_decisions = 0
    gold_matches = 0
    gold_non_matches = 0
    non_match_correct = 0
    exact_spans = 0
    overlapping_spans = 0
    for ann in annotations:
        predicted = matcher.match_content(ann.expert_sentence, ann.draft)
        if predicted.matched == ann.gold.matched:
            correct_decisions += 1
        if ann.gold.matched:
            gold_matches += 1
            if predicted.matched:
                if predicted.span == ann.gold.span:
                    exact_spans += 1
                if _overlaps(ann.draft, predicted.span, ann.gold.span):
                    overlapping_spans += 1
        else:
            gold_non_matches += 1
            if not predicted.matched:
                non_match_correct += 1
    return JudgeEvalReport(
        agreement=_fraction(correct_decisions, len(annotations)),
        non_match_agreement=_fraction(non_match_correct, gold_non_matches),
        match_agreement=_fraction(exact_spans, gold_matches),
        match_overlap=_fraction(overlapping_spans, gold_matches),
        n=len(annotations),
    )
