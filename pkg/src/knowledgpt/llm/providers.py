"""LLM providers: a live chat-completion client and a deterministic scripted stub.

The scripted provider keys canned responses by (template name, normalized hash of
the filled slots), so fixtures survive whitespace drift in the template bodies.
Fixture files are JSON objects with the schema:

    {"request_key": {"template": "<name>", "slots": {...}}, "response": <object or string>}

A file named ``_default.<template>.json`` supplies a fallback response for a
template when no keyed fixture matches; without one, an unmatched request is a
ProviderError.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import urllib.request
from pathlib import Path
from typing import Any


class ProviderError(Exception):
    """Transport, timeout, or missing-fixture failure while consulting a provider."""


_WHITESPACE = re.compile(r"\s+")


def _normalize(value: Any) -> Any:
    """Collapse whitespace in strings, recursively, so slot hashing is drift-proof."""
    if isinstance(value, str):
        return _WHITESPACE.sub(" ", value).strip()
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    return value


def request_key(template: str, slots: dict[str, Any]) -> str:
    canonical = json.dumps(_normalize(slots), ensure_ascii=False, sort_keys=True)
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return f"{template}:{digest[:24]}"


class ScriptedLlm:
    """Deterministic provider replaying canned responses; identical request, identical response."""

    kind = "scripted"

    def __init__(self, fixtures_dir: str | Path | None = None) -> None:
        self._responses: dict[str, Any] = {}
        self._defaults: dict[str, Any] = {}
        self._lock = threading.Lock()
        if fixtures_dir is not None:
            self.load_dir(fixtures_dir)

    def load_dir(self, fixtures_dir: str | Path) -> int:
        """Load every ``*.json`` fixture under a directory; returns how many were read."""
        root = Path(fixtures_dir)
        count = 0
        for path in sorted(root.glob("*.json")):
            data = json.loads(path.read_text(encoding="utf-8"))
            if path.name.startswith("_default."):
                template = path.name[len("_default.") : -len(".json")]
                self._defaults[template] = data["response"]
                continue
            key_spec = data["request_key"]
            self.add(key_spec["template"], key_spec["slots"], data["response"])
            count += 1
        return count

    def add(self, template: str, slots: dict[str, Any], response: Any) -> None:
        self._responses[request_key(template, slots)] = response

    def add_default(self, template: str, response: Any) -> None:
        self._defaults[template] = response

    def complete(self, template: str, prompt: str, slots: dict[str, Any]) -> Any:
        with self._lock:
            key = request_key(template, slots)
            if key in self._responses:
                return self._responses[key]
            if template in self._defaults:
                return self._defaults[template]
        raise ProviderError(f"no scripted response for {key}")


class LiveLlm:
    """Chat-completion HTTP client; base URL and model come from configuration,
    the API key from the KNOWLEDGPT_API_KEY environment variable."""

    kind = "live"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        timeout: float = 60.0,
        opener=urllib.request.urlopen,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._opener = opener

    def complete(self, template: str, prompt: str, slots: dict[str, Any]) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            f"{self.base_url}/chat/completions",
            data=payload,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with self._opener(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (OSError, ValueError) as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("completion response missing content") from exc
