"""Deterministic baseline backends: no model, no network, pure functions."""

from __future__ import annotations

import hashlib

import numpy as np

from ..segmenter import SentenceSegmenter
from ..taxonomy import OTHER_LABEL, ThemeTaxonomy
from ..textutil import tokens
from .base import NO_MATCH, MatchDecision

DEFAULT_TAU = 0.6
DEFAULT_EMBED_DIM = 256


class OverlapMatcher:
    """Token-overlap matcher.

    Scores each draft sentence by the fraction of the expert sentence's
    token set it contains; the best-scoring sentence wins if its score
    reaches ``tau``, earliest sentence breaking ties.
    """

    def __init__(self, tau: float = DEFAULT_TAU, segmenter: SentenceSegmenter | None = None):
        if not 0.0 < tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {tau}")
        self.tau = tau
        self.segmenter = segmenter or SentenceSegmenter()

    def match_content(self, expert_sentence: str, draft: str) -> MatchDecision:
        expert_tokens = set(tokens(expert_sentence))
        if not expert_tokens:
            return NO_MATCH
        best_score = 0.0
        best_text: str | None = None
        for sentence in self.segmenter.segment(draft):
            draft_tokens = set(tokens(sentence.text))
            score = len(expert_tokens & draft_tokens) / len(expert_tokens)
            if score > best_score:
                best_score = score
                best_text = sentence.text
        if best_text is not None and best_score >= self.tau:
            return MatchDecision.match(best_text)
        return NO_MATCH


class KeywordClassifier:
    """Keyword-hit theme classifier; zero hits fall through to Other."""

    def classify_theme(self, sentence: str, taxonomy: ThemeTaxonomy) -> str:
        sentence_tokens = tokens(sentence)
        best_label = OTHER_LABEL
        best_hits = 0
        for theme in taxonomy.themes:
            hits = sum(self._count(tuple(tokens(k)), sentence_tokens) for k in theme.keywords)
            if hits > best_hits:  # ties keep the earlier theme
                best_hits = hits
                best_label = theme.name
        return best_label

    @staticmethod
    def _count(needle: tuple[str, ...], haystack: list[str]) -> int:
        if not needle or len(needle) > len(haystack):
            return 0
        size = len(needle)
        return sum(
            1 for i in range(len(haystack) - size + 1) if tuple(haystack[i : i + size]) == needle
        )


class HashedEmbedder:
    """Hashed bag-of-tokens embedding, L2-normalized.

    Deterministic across processes (sha1, not the builtin hash). Empty
    text embeds to the zero vector.
    """

    def __init__(self, dimension: int = DEFAULT_EMBED_DIM):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens(text):
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dimension
            vec[bucket] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
        return vec
