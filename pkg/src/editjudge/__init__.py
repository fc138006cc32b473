"""editjudge: edit-load evaluation of LLM-drafted patient message responses.

Scores a response draft against a clinician-written reference at two
levels: content (expected matches/additions/deletions over sentences)
and theme (micro-F1 over sentence theme labels). Also ships the
inter-annotator analyses and the retrieval / preference-pair data
construction pipelines that surround the metric.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (
    CosineMatrix,
    IapReport,
    StrictAgreementReport,
    ThemeFrequencyReport,
    iap,
    pairwise_cosine,
    strict_agreement,
    theme_frequency,
)
from .backends import (
    NO_MATCH,
    NO_MATCH_TOKEN,
    HashedEmbedder,
    JudgeEvalReport,
    KeywordClassifier,
    MatchDecision,
    OverlapMatcher,
    RemoteBackendConfig,
    RemoteClient,
    RemoteEmbedder,
    RemoteMatcher,
    RemoteThemeClassifier,
    SpanPolicy,
    cosine,
    evaluate_matcher,
)
from .adaptation import (
    IndexEntry,
    PreferencePair,
    RetrievalIndex,
    Retrieved,
    TadpoleTemplates,
    TadpoleTuple,
    build_index,
    build_rag_prompt,
    generate_tadpole_tuples,
    make_preference_pairs,
    render_prompt,
    retrieve_topk,
)
from .errors import (
    BackendError,
    ConfigError,
    DatasetError,
    EditJudgeError,
    SpanNotFoundError,
    TemplateError,
)
from .metrics import (
    EditCounts,
    EditResult,
    PRF,
    ScoreReport,
    ThemeScores,
    aggregate_micro,
    classwise_content_recall,
    content_scores,
    count_edits,
    evaluate_dataset,
    theme_counts,
    theme_edit_scores,
)
from .records import (
    DraftRecord,
    JudgeAnnotation,
    MessageSample,
    MultiResponseSample,
    load_dataset,
    load_drafts,
    load_judge_annotations,
    load_multi_response,
    load_samples,
)
from .segmenter import Sentence, SentenceSegmenter, load_abbreviations, segment
from .taxonomy import OTHER_LABEL, ThemeDef, ThemeTaxonomy, load_taxonomy
