"""Chat-completion clients: a live HTTP client and deterministic test doubles.

The scripted client is a first-class implementation keyed by pair key or
prompt hash, so the whole pipeline runs offline and reproducibly; its
token counts come from a whitespace tokenizer stub and are not billing
grade. The HTTP client speaks the common chat-completions JSON shape and
reads credentials from ``TRACELLM_API_BASE`` / ``TRACELLM_API_KEY``
environment variables only, never from config files.
"""

from __future__ import annotations

import hashlib
import itertools
import os
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import _http
from .errors import ClientError
from .prompting import RenderedPrompt

API_BASE_ENV = "TRACELLM_API_BASE"
API_KEY_ENV = "TRACELLM_API_KEY"


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    prompt: RenderedPrompt
    temperature: float = 0.0
    max_tokens: int = 1
    want_logprobs: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    input_tokens: int
    output_tokens: int
    token_logprobs: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")


def _stub_tokens(text: str) -> int:
    # whitespace tokenizer stub; fine for determinism, not for billing
    return len(text.split())


class ScriptedClient:
    """Deterministic stand-in for a live model.

    Responses are looked up by pair key ("src::tgt"), then by SHA-256 of
    the full prompt text. ``sequences`` serve stochastic-sampling tests:
    each call consumes the next entry for that pair, cycling when
    exhausted. Safe to share across threads.
    """

    model = "scripted"

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        by_prompt_hash: Mapping[str, str] | None = None,
        logprobs: Mapping[str, Mapping[str, float]] | None = None,
        sequences: Mapping[str, Iterable[str]] | None = None,
    ):
        self.responses = dict(responses or {})
        self.by_prompt_hash = dict(by_prompt_hash or {})
        self.logprobs = {k: dict(v) for k, v in (logprobs or {}).items()}
        self._cycles = {k: itertools.cycle(list(v)) for k, v in (sequences or {}).items()}
        self._lock = threading.Lock()
        self.calls = 0

    @staticmethod
    def prompt_hash(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        key = req.prompt.key
        with self._lock:
            self.calls += 1
            if key in self._cycles:
                text = next(self._cycles[key])
            elif key in self.responses:
                text = self.responses[key]
            else:
                h = self.prompt_hash(req.prompt.text)
                if h in self.by_prompt_hash:
                    text = self.by_prompt_hash[h]
                else:
                    raise ClientError(f"unscripted pair: {key}")
        lp = self.logprobs.get(key) if req.want_logprobs else None
        return CompletionResponse(
            text=text,
            input_tokens=_stub_tokens(req.prompt.text),
            output_tokens=_stub_tokens(text),
            token_logprobs=lp,
        )


def gold_echo_client(pairs) -> ScriptedClient:
    """Scripted client answering every pair with its gold label."""
    return ScriptedClient(responses={p.key: ("Yes" if p.label else "No") for p in pairs})


class HttpChatClient:
    """Live chat-completions client with retry, backoff, and usage capture."""

    def __init__(
        self,
        model: str,
        base_url: str | None = None,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        max_attempts: int = _http.MAX_ATTEMPTS,
        transport: _http.Transport | None = None,
        sleep=None,
    ):
        self.model = model
        base = base_url or os.environ.get(API_BASE_ENV)
        if not base:
            raise ClientError(f"no endpoint configured; set {API_BASE_ENV}")
        self.url = base if base.rstrip("/").endswith("chat/completions") else (
            base.rstrip("/") + "/chat/completions"
        )
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.transport = transport
        self.sleep = sleep
        self.last_retries = 0

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        payload: dict = {
            "model": req.model or self.model,
            "messages": [{"role": "user", "content": req.prompt.text}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        if req.want_logprobs:
            payload["logprobs"] = True
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        kwargs: dict = {"timeout": self.timeout, "max_attempts": self.max_attempts}
        if self.transport is not None:
            kwargs["transport"] = self.transport
        if self.sleep is not None:
            kwargs["sleep"] = self.sleep
        _status, doc, retries = _http.post_json(self.url, payload, headers, **kwargs)
        self.last_retries = retries
        try:
            choice = doc["choices"][0]
            text = choice["message"]["content"]
            usage = doc.get("usage", {})
        except (KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"malformed completion response: {exc!r}") from exc
        return CompletionResponse(
            text=text,
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
            token_logprobs=_extract_logprobs(choice),
        )


def _extract_logprobs(choice: dict) -> dict[str, float] | None:
    lp = choice.get("logprobs")
    if not lp:
        return None
    content = lp.get("content") or []
    if not content:
        return None
    first = content[0]
    out = {first.get("token", ""): float(first.get("logprob", 0.0))}
    for alt in first.get("top_logprobs", []) or []:
        out[alt["token"]] = float(alt["logprob"])
    return out


def complete(client, req: CompletionRequest) -> CompletionResponse:
    """Uniform entry point over any client object exposing ``complete``."""
    return client.complete(req)


@dataclass(frozen=True)
class PricingTable:
    """Per-model cost rates in currency units per million tokens."""

    rates: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        for model, entry in self.rates.items():
            for k in ("input_cost_per_million", "output_cost_per_million"):
                if entry[k] < 0:
                    raise ValueError(f"negative rate {k} for {model!r}")

    def rate(self, model: str) -> tuple[float, float]:
        if model not in self.rates:
            raise ValueError(f"unknown model {model!r} in pricing table")
        entry = self.rates[model]
        return entry["input_cost_per_million"], entry["output_cost_per_million"]


@dataclass
class CostReport:
    model: str
    n_requests: int
    input_tokens: int
    output_tokens: int
    input_cost: float
    output_cost: float
    total_cost: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def cost_report(
    usages: Iterable[CompletionResponse],
    pricing: PricingTable,
    model: str,
) -> CostReport:
    """Sum usage and price it: cost = tokens / 1e6 x per-million rate, per direction."""
    rate_in, rate_out = pricing.rate(model)
    n = tin = tout = 0
    for u in usages:
        n += 1
        tin += u.input_tokens
        tout += u.output_tokens
    input_cost = tin / 1e6 * rate_in
    output_cost = tout / 1e6 * rate_out
    return CostReport(
        model=model,
        n_requests=n,
        input_tokens=tin,
        output_tokens=tout,
        input_cost=input_cost,
        output_cost=output_cost,
        total_cost=input_cost + output_cost,
    )
