"""OpenAI-compatible chat and embedding clients with retries and caching.

Any endpoint speaking the /v1/chat/completions and /v1/embeddings wire
protocols works; credentials come from the environment only. Responses are
cached content-addressed on disk so reruns are free and deterministic.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from .errors import ServiceError

API_KEY_ENV = "CLAIMNORM_API_KEY"
BASE_URL_ENV = "CLAIMNORM_BASE_URL"

MAX_ATTEMPTS = 3
BACKOFF_INITIAL_S = 1.0


class ResponseCache:
    """Content-addressed JSON documents, one file per response."""

    def __init__(self, cache_dir):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def digest(*parts: str) -> str:
        h = hashlib.sha256()
        for part in parts:
            h.update(part.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()

    def get(self, key: str):
        path = self.dir / f"{key}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, value) -> None:
        path = self.dir / f"{key}.json"
        fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(value, f, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _retryable_status(status: int) -> bool:
    return status == 429 or status >= 500


def _request_with_retries(client: httpx.Client, url: str, payload: dict, headers: dict) -> dict:
    backoff = BACKOFF_INITIAL_S
    last_error = None
    for attempt in range(MAX_ATTEMPTS):
        try:
            resp = client.post(url, json=payload, headers=headers)
            if _retryable_status(resp.status_code):
                last_error = ServiceError(f"{url}: HTTP {resp.status_code}")
            else:
                resp.raise_for_status()
                return resp.json()
        except httpx.TransportError as e:
            last_error = ServiceError(f"{url}: transport error: {e}")
        except httpx.HTTPStatusError as e:
            raise ServiceError(f"{url}: HTTP {e.response.status_code}") from e
        if attempt < MAX_ATTEMPTS - 1:
            time.sleep(backoff)
            backoff *= 2
    raise last_error


class ChatClient:
    """Chat-completions client against any OpenAI-compatible endpoint."""

    def __init__(
        self,
        model: str,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        cache: Optional[ResponseCache] = None,
        temperature: float = 0.0,
        max_tokens: int = 512,
        timeout: float = 120.0,
    ):
        self.model = model
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or "https://api.openai.com/v1").rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY", "")
        self.cache = cache
        self.temperature = temperature
        self.max_tokens = max_tokens
        self._http = httpx.Client(timeout=timeout)
        self.n_calls = 0

    def cache_key(self, system: str, user: str) -> str:
        return ResponseCache.digest(self.model, system, user)

    def complete(self, system: str, user: str, use_cache: bool = True) -> str:
        if self.cache and use_cache:
            hit = self.cache.get(self.cache_key(system, user))
            if hit is not None:
                return hit["content"]
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        data = _request_with_retries(
            self._http, f"{self.base_url}/chat/completions", payload, headers
        )
        self.n_calls += 1
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ServiceError(f"malformed chat-completions response: {e}") from e
        if self.cache:
            self.cache.put(self.cache_key(system, user), {"content": content})
        return content


class EmbeddingClient:
    """Batched embeddings client with per-text caching."""

    def __init__(
        self,
        model: str = "text-embedding-3-small",
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        cache: Optional[ResponseCache] = None,
        batch_size: int = 128,
        timeout: float = 120.0,
    ):
        self.model = model
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or "https://api.openai.com/v1").rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY", "")
        self.cache = cache
        self.batch_size = batch_size
        self._http = httpx.Client(timeout=timeout)
        self.n_calls = 0

    def _key(self, text: str) -> str:
        return ResponseCache.digest("embed", self.model, text)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        results: list[Optional[list[float]]] = [None] * len(texts)
        misses = []
        for i, text in enumerate(texts):
            if not text:
                raise ServiceError(f"embed: empty text at index {i}")
            if self.cache:
                hit = self.cache.get(self._key(text))
                if hit is not None:
                    results[i] = hit["embedding"]
                    continue
            misses.append(i)

        headers = {"Authorization": f"Bearer {self.api_key}"}
        failed_batches = []
        dim = None
        for start in range(0, len(misses), self.batch_size):
            batch = misses[start : start + self.batch_size]
            payload = {"model": self.model, "input": [texts[i] for i in batch]}
            try:
                data = _request_with_retries(
                    self._http, f"{self.base_url}/embeddings", payload, headers
                )
                self.n_calls += 1
            except ServiceError:
                failed_batches.append(start // self.batch_size)
                continue
            vectors = [item["embedding"] for item in data["data"]]
            for i, vec in zip(batch, vectors):
                if dim is None:
                    dim = len(vec)
                elif len(vec) != dim:
                    raise ServiceError(
                        f"embedding dimension mismatch across batches: {len(vec)} != {dim}"
                    )
                results[i] = vec
                if self.cache:
                    self.cache.put(self._key(texts[i]), {"embedding": vec})
        if failed_batches:
            raise ServiceError(f"embedding batches failed after retries: {failed_batches}")
        return results  # type: ignore[return-value]


_POST_RE = re.compile(r"^Post: (.*?)(?:\n\n|$)", re.DOTALL | re.MULTILINE)


def extract_post_from_user_prompt(user: str) -> str:
    """Pull the target post text back out of a rendered user prompt.

    With few-shot prompts the target post is the last "Post:" block.
    """
    matches = _POST_RE.findall(user)
    return matches[-1].strip() if matches else ""


class MockChatClient:
    """Deterministic offline stand-in for ChatClient.

    ``responder(system, user)`` returns the raw response string; the default
    emits valid 5W1H JSON whose claim is the post's first twelve words.
    Exceptions raised by the responder propagate like service failures.
    """

    def __init__(
        self,
        responder: Optional[Callable[[str, str], str]] = None,
        cache: Optional[ResponseCache] = None,
        model: str = "mock-llm",
    ):
        self.model = model
        self.cache = cache
        self.responder = responder or default_mock_responder
        self.n_calls = 0
        self.seen_prompts: list[tuple[str, str]] = []

    def cache_key(self, system: str, user: str) -> str:
        return ResponseCache.digest(self.model, system, user)

    def complete(self, system: str, user: str, use_cache: bool = True) -> str:
        if self.cache and use_cache:
            hit = self.cache.get(self.cache_key(system, user))
            if hit is not None:
                return hit["content"]
        self.seen_prompts.append((system, user))
        content = self.responder(system, user)
        self.n_calls += 1
        if self.cache:
            self.cache.put(self.cache_key(system, user), {"content": content})
        return content


def default_mock_responder(system: str, user: str) -> str:
    post = extract_post_from_user_prompt(user)
    claim = " ".join(post.split()[:12]) or "no claim found"
    if '"what"' not in system:
        return json.dumps({"claim": claim}, ensure_ascii=False)
    return json.dumps(
        {
            "what": " ".join(post.split()[:6]),
            "who": "",
            "where": "",
            "when": "",
            "how": "",
            "why": "",
            "claim": claim,
        },
        ensure_ascii=False,
    )


def echo_responder(claims_by_post: dict[str, str]) -> Callable[[str, str], str]:
    """Responder that returns the gold claim for each known post text."""

    def respond(system: str, user: str) -> str:
        post = extract_post_from_user_prompt(user)
        claim = claims_by_post.get(post, " ".join(post.split()[:12]))
        fields = {k: "" for k in ("what", "who", "where", "when", "how", "why")}
        if '"what"' not in system:
            return json.dumps({"claim": claim}, ensure_ascii=False)
        return json.dumps({**fields, "claim": claim}, ensure_ascii=False)

    return respond


class MockEmbeddingClient:
    """Hashed bag-of-words embeddings: deterministic, overlap-sensitive."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.n_calls = 0

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        self.n_calls += 1
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            tokens = text.lower().split() or ["<empty>"]
            for tok in tokens:
                bucket = int.from_bytes(
                    hashlib.md5(tok.encode("utf-8")).digest()[:4], "little"
                ) % self.dim
                vec[bucket] += 1.0
            out.append(vec)
        return out
