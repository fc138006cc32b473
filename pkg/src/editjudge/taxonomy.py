"""Theme taxonomy: the configurable label space for sentence classification.

The taxonomy is data, not code. The shipped default has eight themes; the
terminal "Other" label is implicit and never listed explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

OTHER_LABEL = "Other"


@dataclass(frozen=True)
class ThemeDef:
    name: str
    description: str
    keywords: tuple[str, ...]


@dataclass(frozen=True)
class ThemeTaxonomy:
    themes: tuple[ThemeDef, ...]

    @property
    def labels(self) -> list[str]:
        """All assignable labels: the themes in order, then Other."""
        return [t.name for t in self.themes] + [OTHER_LABEL]

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.themes]

    def theme(self, name: str) -> ThemeDef:
        for t in self.themes:
            if t.name == name:
                return t
        raise KeyError(name)


def _parse_taxonomy(obj: dict, source: str) -> ThemeTaxonomy:
    raw = obj.get("themes")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{source}: taxonomy needs a non-empty 'themes' list")
    themes = []
    seen = set()
    for item in raw:
        if not isinstance(item, dict):
            raise ConfigError(f"{source}: each theme must be an object")
        name = str(item.get("name", "")).strip()
        if not name:
            raise ConfigError(f"{source}: theme with empty name")
        if name.lower() == OTHER_LABEL.lower():
            raise ConfigError(f"{source}: '{OTHER_LABEL}' is implicit and must not be listed")
        if name in seen:
            raise ConfigError(f"{source}: duplicate theme name '{name}'")
        seen.add(name)
        keywords = item.get("keywords", [])
        if not isinstance(keywords, list):
            raise ConfigError(f"{source}: theme '{name}' keywords must be a list")
        themes.append(
            ThemeDef(
                name=name,
                description=str(item.get("description", "")).strip(),
                keywords=tuple(str(k).strip().lower() for k in keywords if str(k).strip()),
            )
        )
    return ThemeTaxonomy(themes=tuple(themes))


def load_taxonomy(spec: str | Path = "default") -> ThemeTaxonomy:
    """Load a taxonomy config, or the shipped default when spec == "default"."""
    if spec == "default":
        raw = resources.files("editjudge.data").joinpath("taxonomy.json").read_text("utf-8")
        return _parse_taxonomy(json.loads(raw), "default taxonomy")
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"{path}: taxonomy file not found")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    return _parse_taxonomy(obj, str(path))
