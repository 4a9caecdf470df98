import json
import os
from typing import Protocol
from urllib.parse import urlparse

import requests

from nerforge import constants
from nerforge.config import GatewayConfig
from nerforge.errors import ConfigError
from nerforge.simple_logging import debug_print


class GatewayConfigError(ConfigError):
    code = "GatewayConfigError"


class BackendError(Exception):
    """A failed request. The gateway retries these and records Transport failures."""


class NotFoundError(BackendError):
    pass


class ChatBackend(Protocol):
    def complete(self, passage_id: str, system: str, user: str) -> str: ...


class MockBackend:
    """
    Deterministic stand-in for an LLM endpoint: returns the fixture text of
    known passage ids and raises the configured error for all others.
    """

    def __init__(
        self, fixtures: dict[str, str], missing_error: type[BackendError] = NotFoundError
    ) -> None:
        self.fixtures = dict(fixtures)
        self.missing_error = missing_error

    def complete(self, passage_id: str, system: str, user: str) -> str:
        if passage_id not in self.fixtures:
            raise self.missing_error("No fixture for passage " + passage_id)
        return self.fixtures[passage_id]

    @staticmethod
    def from_file(path: str) -> "MockBackend":
        if not os.path.isfile(path):
            raise GatewayConfigError("Mock fixture file " + path + " does not exist")
        fixtures = {}
        with open(path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                    fixtures[str(data["id"])] = str(data["response"])
                except (json.JSONDecodeError, KeyError, TypeError):
                    raise GatewayConfigError(
                        f"{path}:{line_number}: expected {{id, response}}"
                    ) from None
        return MockBackend(fixtures)


def mock_backend(fixtures: dict[str, str]) -> MockBackend:
    return MockBackend(fixtures)


class HttpChatBackend:
    """Client for an OpenAI compatible chat completions endpoint."""

    def __init__(
        self,
        cfg: GatewayConfig,
        api_key: str | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.cfg = cfg
        self.url = chat_completions_url(cfg.endpoint)
        self.api_key = api_key or os.environ.get(constants.api_key_environment_variable)
        self.session = session or requests.Session()

    def complete(self, passage_id: str, system: str, user: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = "Bearer " + self.api_key
        payload = {
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": 0,
        }
        debug_print("Requesting annotation for", passage_id)
        try:
            response = self.session.post(
                self.url, json=payload, headers=headers, timeout=self.cfg.timeout
            )
            response.raise_for_status()
            content = response.json()["choices"][0]["message"]["content"]
        except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendError(f"Request for {passage_id} failed: {e}") from e
        if not isinstance(content, str):
            raise BackendError(f"Response for {passage_id} has no text content")
        return content


def chat_completions_url(endpoint: str) -> str:
    parsed = urlparse(endpoint)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise GatewayConfigError("Endpoint must be an http(s) URL or mock:FIXTURES.jsonl")
    url = endpoint.rstrip("/")
    if not url.endswith("/chat/completions"):
        url += "/chat/completions"
    return url


def create_backend(cfg: GatewayConfig) -> ChatBackend:
    if cfg.endpoint.startswith(constants.mock_endpoint_prefix):
        return MockBackend.from_file(cfg.endpoint[len(constants.mock_endpoint_prefix) :])
    return HttpChatBackend(cfg)
