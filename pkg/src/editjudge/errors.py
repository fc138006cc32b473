"""Exception hierarchy shared across the package.

CLI exit codes map onto these: ConfigError -> 1, DatasetError -> 2,
BackendError -> 3.
"""

from __future__ import annotations


class EditJudgeError(Exception):
    """Base class for all editjudge errors."""


class ConfigError(EditJudgeError):
    """Bad configuration: unknown flag values, missing files, bad templates."""


class TemplateError(ConfigError):
    """A prompt template is malformed or missing a required placeholder."""


class DatasetError(EditJudgeError):
    """A data file failed validation; message carries path and line number."""


class BackendError(EditJudgeError):
    """A judge/classifier/embedder backend failed after exhausting retries."""


class SpanNotFoundError(EditJudgeError):
    """A Match span could not be located in the draft it was judged against.

    Under the strict span policy this cannot happen: invalid spans are
    downgraded to NO MATCH before they reach edit counting.
    """
