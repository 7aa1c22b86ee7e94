"""Shared HTTP plumbing: a tiny app contract over http.server, plus a fetch helper.

Every service in this package is an object with a ``handle`` method taking
(method, path, query, body, headers) and returning an HttpResult. The server
is the stdlib ThreadingHTTPServer, so concurrent requests are answered on
worker threads; apps must be thread-safe.
"""

from __future__ import annotations

import logging
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger(__name__)

XML_CONTENT_TYPE = "text/xml; charset=utf-8"
TEXT_CONTENT_TYPE = "text/plain; charset=utf-8"


@dataclass
class HttpResult:
    body: bytes
    status: int = 200
    content_type: str = XML_CONTENT_TYPE
    headers: tuple[tuple[str, str], ...] = ()


class TransportError(Exception):
    """The remote side could not be reached or gave a non-HTTP answer."""


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _dispatch(self, method: str) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        body = b""
        if method == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
        try:
            result = self.server.app.handle(  # type: ignore[attr-defined]
                method, parsed.path, parsed.query, body, self.headers
            )
        except Exception:
            log.exception("unhandled error serving %s %s", method, self.path)
            result = HttpResult(
                body=b"internal error\n", status=500, content_type=TEXT_CONTENT_TYPE
            )
        payload = result.body
        self.send_response(result.status)
        self.send_header("Content-Type", result.content_type)
        self.send_header("Content-Length", str(len(payload)))
        for name, value in result.headers:
            self.send_header(name, value)
        self.end_headers()
        if method != "HEAD":
            self.wfile.write(payload)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_HEAD(self) -> None:
        self._dispatch("HEAD")

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)


def make_server(app, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Bind a threaded HTTP server for ``app``; port 0 picks a free port."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.daemon_threads = True
    server.app = app  # type: ignore[attr-defined]
    return server


def server_url(server: ThreadingHTTPServer) -> str:
    host, port = server.server_address[:2]
    return f"http://{host}:{port}/"


def start_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


@dataclass
class FetchResult:
    status: int
    body: bytes
    headers: dict[str, str] = field(default_factory=dict)


def fetch(url: str, timeout: float = 30.0,
          request_headers: dict[str, str] | None = None) -> FetchResult:
    """GET a URL; HTTP error statuses are results, transport failures raise."""
    req = urllib.request.Request(url, headers=request_headers or {})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return FetchResult(
                status=resp.status, body=resp.read(), headers=dict(resp.headers)
            )
    except urllib.error.HTTPError as exc:
        return FetchResult(
            status=exc.code, body=exc.read(), headers=dict(exc.headers)
        )
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise TransportError(f"cannot fetch {url}: {exc}") from None


def post_form(url: str, fields: dict[str, str], timeout: float = 30.0) -> FetchResult:
    data = urllib.parse.urlencode(fields).encode("ascii")
    req = urllib.request.Request(
        url, data=data,
        headers={"Content-Type": "application/x-www-form-urlencoded"},
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return FetchResult(
                status=resp.status, body=resp.read(), headers=dict(resp.headers)
            )
    except urllib.error.HTTPError as exc:
        return FetchResult(
            status=exc.code, body=exc.read(), headers=dict(exc.headers)
        )
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise TransportError(f"cannot post to {url}: {exc}") from None
