"""Page fetching: raw HTTP body plus the DOM after a remote browser renders it.

The renderer is any endpoint speaking the W3C WebDriver protocol
(chromedriver, geckodriver, a Selenium grid).
"""

from __future__ import annotations

import time
from datetime import datetime, timezone

import requests

from ..errors import FetchTimeout, HttpError, RendererUnavailable
from ..urlkit import parse_url
from .net import require_network
from .types import PageSnapshot

_SNAPSHOT_SCRIPT = "return [document.readyState, document.documentElement.outerHTML];"
DEFAULT_CAPABILITIES = {
    "browserName": "chrome",
    "goog:chromeOptions": {"args": ["--headless=new", "--disable-gpu", "--no-sandbox"]},
}


class WebDriverRenderer:
    """Render a page and wait until its DOM settles.

    Settled means ``document.readyState == "complete"`` and the serialized DOM
    unchanged for ``quiet_period`` seconds, giving up after ``max_wait``.
    """

    def __init__(self, endpoint: str, quiet_period=2.0, max_wait=15.0, poll_interval=0.25,
                 timeout=30.0, capabilities=None, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.quiet_period = quiet_period
        self.max_wait = max_wait
        self.poll_interval = poll_interval
        self.timeout = timeout
        self.capabilities = capabilities or DEFAULT_CAPABILITIES
        self.session = session or requests.Session()

    def _call(self, method: str, path: str, payload=None):
        try:
            resp = self.session.request(method, self.endpoint + path, json=payload, timeout=self.timeout)
        except requests.Timeout:
            raise FetchTimeout(f"renderer timed out on {path}") from None
        except requests.RequestException as exc:
            raise RendererUnavailable(f"renderer unreachable: {exc}") from None
        try:
            body = resp.json()
        except ValueError:
            raise RendererUnavailable(f"renderer sent non-JSON reply ({resp.status_code})") from None
        value = body.get("value") if isinstance(body, dict) else None
        if resp.status_code >= 400:
            error = value.get("error", "") if isinstance(value, dict) else ""
            if error == "timeout":
                raise FetchTimeout(f"renderer timeout: {value.get('message', '')}")
            raise RendererUnavailable(f"renderer error {resp.status_code}: {error}")
        return value

    def render(self, url: str) -> tuple[str, str]:
        """Return ``(final_url, serialized_dom)``."""
        require_network("renderer")
        created = self._call("POST", "/session", {"capabilities": {"alwaysMatch": self.capabilities}})
        session_id = created.get("sessionId") if isinstance(created, dict) else None
        if not session_id:
            raise RendererUnavailable("renderer did not return a session id")
        base = f"/session/{session_id}"
        try:
            self._call("POST", base + "/url", {"url": url})
            dom = self._settle(base)
            final_url = self._call("GET", base + "/url")
        finally:
            try:
                self._call("DELETE", base)
            except (RendererUnavailable, FetchTimeout):
                pass
        return final_url, dom

    def _settle(self, base: str) -> str:
        started = time.monotonic()
        last_dom = None
        stable_since = started
        while True:
            state, dom = self._call("POST", base + "/execute/sync", {"script": _SNAPSHOT_SCRIPT, "args": []})
            now = time.monotonic()
            if dom != last_dom or state != "complete":
                last_dom = dom
                stable_since = now
            elif now - stable_since >= self.quiet_period:
                return dom
            if now - started >= self.max_wait:
                return dom
            time.sleep(self.poll_interval)


def http_fetch(url: str, timeout=10.0, session=None) -> tuple[int, str, str]:
    """Fetch the raw body without executing scripts: ``(status, body, url)``."""
    require_network("http")
    session = session or requests
    try:
        resp = session.get(url, timeout=timeout, headers={"User-Agent": "Mozilla/5.0 (subtlephish)"})
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise FetchTimeout(f"{url}: {exc}") from None
    except requests.RequestException as exc:
        raise FetchTimeout(f"{url}: {exc}") from None
    return resp.status_code, resp.text, resp.url


def fetch_snapshot(url: str, renderer: WebDriverRenderer | None, timeout=10.0, session=None,
                   now=None) -> PageSnapshot:
    """Capture the page before and after rendering.

    Without a renderer the snapshot holds only the raw body. Non-2xx/3xx
    responses raise ``HttpError`` carrying a snapshot with empty bodies.
    """
    parse_url(url)
    fetched_at = (now or datetime.now(timezone.utc)).replace(microsecond=0)
    status, body, _ = http_fetch(url, timeout=timeout, session=session)
    if not 200 <= status < 400:
        snapshot = PageSnapshot(url, url, status, "", None, fetched_at)
        raise HttpError(status, snapshot=snapshot)
    if renderer is None:
        return PageSnapshot(url, url, status, body, None, fetched_at)
    final_url, dom = renderer.render(url)
    return PageSnapshot(url, final_url or url, status, body, dom, fetched_at)
