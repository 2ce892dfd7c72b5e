"""Minimal JSON-over-HTTP POST with retry and exponential backoff.

The transport is injectable so both the chat client and the remote
embedding provider can be exercised offline with scripted responses.
Retries fire only on transport failures, HTTP 429, and 5xx; auth and
other 4xx errors fail immediately.
"""

from __future__ import annotations

import json
import logging
import random
import time
import urllib.error
import urllib.request
from typing import Callable

from .errors import ClientError

log = logging.getLogger(__name__)

# transport(url, body_bytes, headers, timeout) -> (status_code, body_bytes)
Transport = Callable[[str, bytes, dict, float], tuple[int, bytes]]

MAX_ATTEMPTS = 5


def _urllib_transport(url: str, body: bytes, headers: dict, timeout: float) -> tuple[int, bytes]:
    req = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def post_json(
    url: str,
    payload: dict,
    headers: dict | None = None,
    *,
    timeout: float = 60.0,
    max_attempts: int = MAX_ATTEMPTS,
    backoff_base: float = 0.5,
    backoff_cap: float = 30.0,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> tuple[int, dict, int]:
    """POST ``payload`` as JSON; return (status, parsed body, retries used)."""
    transport = transport or _urllib_transport
    rng = rng or random.Random()
    hdrs = {"Content-Type": "application/json"}
    if headers:
        hdrs.update(headers)
    body = json.dumps(payload).encode("utf-8")

    last_err = ""
    for attempt in range(max_attempts):
        if attempt > 0:
            delay = min(backoff_cap, backoff_base * (2 ** (attempt - 1)))
            delay *= 0.5 + rng.random() / 2  # jitter in [0.5, 1.0) of the step
            sleep(delay)
        try:
            status, raw = transport(url, body, hdrs, timeout)
        except Exception as exc:  # connection reset, DNS, timeout
            last_err = f"transport failure: {exc}"
            log.warning("POST %s attempt %d failed: %s", url, attempt + 1, exc)
            continue
        if status in (401, 403):
            raise ClientError(f"authentication failed (HTTP {status})")
        if status == 429 or status >= 500:
            last_err = f"HTTP {status}"
            log.warning("POST %s attempt %d got HTTP %d; backing off", url, attempt + 1, status)
            continue
        if status >= 400:
            raise ClientError(f"HTTP {status}: {raw[:200]!r}")
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise ClientError(f"malformed response body: {exc}") from exc
        if attempt:
            log.info("POST %s succeeded after %d retr%s", url, attempt, "y" if attempt == 1 else "ies")
        return status, doc, attempt
    raise ClientError(f"gave up after {max_attempts} attempts: {last_err}")
