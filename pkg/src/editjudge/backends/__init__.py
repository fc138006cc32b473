from .base import (
    NO_MATCH,
    NO_MATCH_TOKEN,
    Embedder,
    MatchDecision,
    Matcher,
    SpanPolicy,
    ThemeClassifier,
    cosine,
    validate_span,
)
from .baseline import DEFAULT_TAU, HashedEmbedder, KeywordClassifier, OverlapMatcher
from .judge_eval import JudgeEvalReport, evaluate_matcher
from .remote import (
    RemoteBackendConfig,
    RemoteClient,
    RemoteEmbedder,
    RemoteMatcher,
    RemoteThemeClassifier,
)
from .templates import (
    default_template,
    load_template,
    placeholders,
    render_template,
    require_placeholders,
)

__all__ = [
    "NO_MATCH",
    "NO_MATCH_TOKEN",
    "DEFAULT_TAU",
    "Embedder",
    "HashedEmbedder",
    "JudgeEvalReport",
    "KeywordClassifier",
    "MatchDecision",
    "Matcher",
    "OverlapMatcher",
    "RemoteBackendConfig",
    "RemoteClient",
    "RemoteEmbedder",
    "RemoteMatcher",
    "RemoteThemeClassifier",
    "SpanPolicy",
    "ThemeClassifier",
    "cosine",
    "default_template",
    "evaluate_matcher",
    "load_template",
    "placeholders",
    "render_template",
    "require_placeholders",
    "validate_span",
]
