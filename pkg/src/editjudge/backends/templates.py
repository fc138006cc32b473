"""Prompt template loading and strict placeholder rendering.

Templates are plain text files with ``{name}`` placeholders; they are
data the user will tune, so they live outside the code.
"""

from __future__ import annotations

import string
from importlib import resources
from pathlib import Path

from ..errors import TemplateError

_TEMPLATE_FILES = {
    "match": "match.txt",
    "classify": "classify.txt",
    "zero_shot": "zero_shot.txt",
    "thematic": "thematic.txt",
    "rag": "rag.txt",
    "enhance": "enhance.txt",
    "corrupt": "corrupt.txt",
}


def default_template(name: str) -> str:
    if name not in _TEMPLATE_FILES:
        raise TemplateError(f"no default template named '{name}'")
    return resources.files("editjudge.data.templates").joinpath(_TEMPLATE_FILES[name]).read_text("utf-8")


def load_template(path: str | Path) -> str:
    path = Path(path)
    if not path.exists():
        raise TemplateError(f"{path}: template file not found")
    return path.read_text(encoding="utf-8")


def placeholders(template: str) -> set[str]:
    """Names of all ``{field}`` placeholders in the template."""
    try:
        return {name for _, name, _, _ in string.Formatter().parse(template) if name}
    except ValueError as exc:
        raise TemplateError(f"malformed template: {exc}") from exc


def require_placeholders(template: str, required: set[str]) -> None:
    missing = required - placeholders(template)
    if missing:
        raise TemplateError(f"template is missing placeholders: {sorted(missing)}")


class _StrictFields(dict):
    def __missing__(self, key: str) -> str:
        raise TemplateError(f"template references unknown placeholder '{{{key}}}'")


def render_template(template: str, **fields: str) -> str:
    try:
        return template.format_map(_StrictFields(fields))
    except (ValueError, IndexError) as exc:
        raise TemplateError(f"malformed template: {exc}") from exc
