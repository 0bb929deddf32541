"""Prompt template catalog.

Templates are plain-text data files with ``<<slot>>`` placeholders (angle brackets
avoid colliding with the JSON braces inside the in-context examples), editable
without touching code. Filling a template checks that every placeholder is
consumed and none remains.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = ("search_code", "entity_linking", "answer", "extraction")

_SLOT = re.compile(r"<<([a-z_]+)>>")


class PromptCatalog:
    """The four prompt templates, loaded from a directory or the packaged defaults."""

    def __init__(self, templates: dict[str, str]) -> None:
        missing = [name for name in TEMPLATE_NAMES if name not in templates]
        if missing:
            raise ValueError(f"missing templates: {', '.join(missing)}")
        self._templates = dict(templates)

    @classmethod
    def bundled(cls) -> "PromptCatalog":
        package = resources.files("knowledgpt.llm") / "templates"
        return cls(
            {
                name: (package / f"{name}.txt").read_text(encoding="utf-8")
                for name in TEMPLATE_NAMES
            }
        )

    @classmethod
    def from_dir(cls, directory: str | Path) -> "PromptCatalog":
        root = Path(directory)
        return cls(
            {
                name: (root / f"{name}.txt").read_text(encoding="utf-8")
                for name in TEMPLATE_NAMES
            }
        )

    def slots(self, name: str) -> set[str]:
        return set(_SLOT.findall(self._templates[name]))

    def fill(self, name: str, slots: dict[str, str]) -> str:
        """Instantiate a template; every placeholder must be filled, with no extras."""
        template = self._templates[name]
        expected = self.slots(name)
        given = set(slots)
        if given != expected:
            raise ValueError(
                f"template {name!r} expects slots {sorted(expected)}, got {sorted(given)}"
            )
        filled = _SLOT.sub(lambda m: slots[m.group(1)], template)
        leftover = _SLOT.search(filled)
        if leftover:
            raise ValueError(f"unfilled placeholder {leftover.group(0)} in {name!r}")
        return filled
