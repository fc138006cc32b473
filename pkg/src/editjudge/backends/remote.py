"""Remote LLM-service backends over the common completion-API shape.

One HTTP client serves chat-completion and embedding endpoints. Requests
retry transient failures with exponential backoff; batch helpers bound
in-flight requests by ``max_concurrency`` and return results in input
order so downstream metrics stay order-deterministic.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Sequence, TypeVar

import httpx
import numpy as np

from ..errors import BackendError, ConfigError
from ..taxonomy import OTHER_LABEL, ThemeTaxonomy
from ..textutil import normalize
from .base import NO_MATCH, NO_MATCH_TOKEN, MatchDecision, SpanPolicy, validate_span
from .templates import default_template, render_template, require_placeholders

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass
class RemoteBackendConfig:
    base_url: str
    model: str
    api_key_env: str = "EDITJUDGE_API_KEY"
    temperature: float = 0.0
    max_concurrency: int = 4
    max_retries: int = 2
    timeout: float = 30.0
    backoff_base: float = 0.5  # seconds; doubles per retry

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ConfigError("backend config: base_url is required")
        if not self.model:
            raise ConfigError("backend config: model is required")
        if self.max_concurrency < 1:
            raise ConfigError("backend config: max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("backend config: max_retries must be >= 0")
        if self.temperature < 0:
            raise ConfigError("backend config: temperature must be >= 0")
        if self.timeout <= 0:
            raise ConfigError("backend config: timeout must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> RemoteBackendConfig:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"{path}: backend config not found")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


class RemoteClient:
    """Thin chat/embeddings client with retries and a bounded worker pool."""

    def __init__(self, config: RemoteBackendConfig):
        self.config = config
        headers = {}
        api_key = os.environ.get(config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=config.base_url, timeout=config.timeout, headers=headers
        )
        # hard in-flight bound, regardless of how many threads call in
        self._slots = threading.BoundedSemaphore(config.max_concurrency)

    def close(self) -> None:
        self._client.close()

    def chat(self, prompt: str) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        data = self._post("chat/completions", payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendError("malformed chat completion response") from None
        if not isinstance(content, str):
            raise BackendError("chat completion content is not a string")
        return content

    def embed(self, text: str) -> list[float]:
        data = self._post("embeddings", {"model": self.config.model, "input": text})
        try:
            vector = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise BackendError("malformed embeddings response") from None
        if not isinstance(vector, list):
            raise BackendError("embedding is not a list")
        return [float(x) for x in vector]

    def _post(self, path: str, payload: dict) -> dict:
        attempts = self.config.max_retries + 1
        error: BackendError | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._slots:
                    response = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                error = BackendError(f"transport failure: {exc}")
                continue
            if response.status_code in _RETRYABLE_STATUS:
                error = BackendError(f"server returned {response.status_code}")
                continue
            if response.status_code >= 400:
                raise BackendError(
                    f"request rejected ({response.status_code}): {response.text[:200]}"
                )
            try:
                return response.json()
            except (json.JSONDecodeError, ValueError):
                error = BackendError("response body is not JSON")
                continue
        assert error is not None
        raise error

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R | BackendError]:
        """Apply ``fn`` across items with bounded concurrency.

        Results come back in input order; per-item failures are captured
        as BackendError values so one bad sample does not end the run.
        """

        def guarded(item: T) -> R | BackendError:
            try:
                return fn(item)
            except BackendError as exc:
                return exc

        if len(items) <= 1:
            return [guarded(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.config.max_concurrency) as pool:
            return list(pool.map(guarded, items))

    def map_chat(self, prompts: Sequence[str]) -> list[str | BackendError]:
        return self.map(self.chat, prompts)


class RemoteMatcher:
    """LLM judge for content matching.

    The model must answer with matching content copied from the draft, or
    the literal NO MATCH string. Non-verbatim spans are handled per the
    configured span policy.
    """

    def __init__(
        self,
        client: RemoteClient,
        template: str | None = None,
        span_policy: SpanPolicy = SpanPolicy.STRICT,
    ):
        self.client = client
        self.template = template if template is not None else default_template("match")
        require_placeholders(self.template, {"expert_sentence", "draft"})
        self.span_policy = span_policy

    def match_content(self, expert_sentence: str, draft: str) -> MatchDecision:
        prompt = render_template(self.template, expert_sentence=expert_sentence, draft=draft)
        output = self.client.chat(prompt).strip()
        if normalize(output) == normalize(NO_MATCH_TOKEN):
            return NO_MATCH
        return validate_span(output, draft, self.span_policy)


class RemoteThemeClassifier:
    """Single-label theme classifier; unknown outputs map to Other."""

    def __init__(self, client: RemoteClient, template: str | None = None):
        self.client = client
        self.template = template if template is not None else default_template("classify")
        require_placeholders(self.template, {"sentence", "labels"})

    def classify_theme(self, sentence: str, taxonomy: ThemeTaxonomy) -> str:
        labels_text = "\n".join(
            f"- {t.name}: {t.description}" for t in taxonomy.themes
        ) + f"\n- {OTHER_LABEL}: anything not covered above"
        prompt = render_template(self.template, sentence=sentence, labels=labels_text)
        output = self.client.chat(prompt).strip()
        wanted = normalize(output)
        for label in taxonomy.labels:
            if wanted == normalize(label):
                return label
        log.warning("classifier output %r is not a known label; using %s", output, OTHER_LABEL)
        return OTHER_LABEL


class RemoteEmbedder:
    """Embedding-endpoint backend; dimension fixed by the remote model."""

    def __init__(self, client: RemoteClient):
        self.client = client
        self.dimension: int | None = None

    def embed(self, text: str) -> np.ndarray:
        vector = np.asarray(self.client.embed(text), dtype=np.float64)
        if self.dimension is None:
            self.dimension = int(vector.shape[0])
        elif vector.shape[0] != self.dimension:
            raise BackendError(
                f"embedding dimension changed: {vector.shape[0]} != {self.dimension}"
            )
        return vector
