"""Read-only HTTP gateway over a weave.

Routes (all GET unless noted)::

    /info                 weave statistics
    /tx/{id}              data bytes of a transaction or bundled item, Content-Type from its tags
    /tx/{id}/meta         transaction metadata as JSON (data omitted)
    /{id}                 same bytes as /tx/{id}
    /name/{name}          302 to /{target} with body {"name", "target", "owner", "seq"}
    /did/{did-or-name}    resolved DID document
    POST /tx              {"owner", "tags": [[name, value]...], "data": b64url}; only with allow_writes

Errors are JSON ``{"error": <code>, "message": ...}`` with 404 for missing
things, 400 for malformed input and 405 for disabled writes.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import unquote, urlsplit

from .did import DidResolver
from .encoding import b64url_decode, canonical_json, is_id
from .errors import BindFailure, InvalidName, NotFound, ParseError, PermadidError
from .naming import NameRegistry
from .weave import Weave

logger = logging.getLogger(__name__)

MAX_BODY = 16 * 1024 * 1024


@dataclass
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 0
    snapshot: str | None = None
    allow_writes: bool = False
    mine_on_write: bool = True


class _Handler(BaseHTTPRequestHandler):
    server_version = "permadid-gateway/1"
    gateway: "Gateway"

    def log_message(self, fmt, *args):
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, body: bytes, content_type: str, extra: dict | None = None):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _json(self, status: int, obj, extra: dict | None = None):
        self._send(status, canonical_json(obj), "application/json", extra)

    def _error(self, status: int, code: str, message: str):
        self._json(status, {"error": code, "message": message})

    def do_GET(self):
        path = unquote(urlsplit(self.path).path)
        parts = [p for p in path.split("/") if p]
        gw = self.gateway
        try:
            with gw.lock:
                if parts == ["info"]:
                    return self._json(200, gw.weave.stats().to_json())
                if len(parts) == 2 and parts[0] == "tx" or len(parts) == 1 and is_id(parts[0]):
                    return self._data(parts[-1])
                if len(parts) == 3 and parts[0] == "tx" and parts[2] == "meta":
                    tx = gw.weave.get(parts[1])
                    meta = tx.to_json()
                    meta.pop("data", None)
                    meta["sealed"] = gw.weave.is_sealed(tx.id)
                    return self._json(200, meta)
                if len(parts) == 2 and parts[0] == "name":
                    target, rec = gw.names.resolve(parts[1])
                    body = {"name": rec.name, "target": target, "owner": rec.owner_address, "seq": rec.sequence}
                    return self._json(302, body, {"Location": f"/{target}"})
                if len(parts) == 2 and parts[0] == "did":
                    doc, tx = gw.resolver.resolve_with_tx(parts[1])
                    return self._json(200, doc.to_json(), {"X-Document-Tx": tx})
        except InvalidName as exc:
            return self._error(404, "UnknownName", str(exc))
        except NotFound as exc:
            return self._error(404, exc.code, str(exc))
        except ParseError as exc:
            return self._error(404, "NotFound", str(exc))
        except PermadidError as exc:
            return self._error(400, exc.code, str(exc))
        return self._error(404, "NotFound", f"no route for {path}")

    do_HEAD = do_GET

    def _data(self, tx_id: str):
        if not is_id(tx_id):
            raise NotFound(f"{tx_id!r} is not a transaction id")
        tx = self.gateway.weave.get(tx_id)
        ctype = tx.tag("Content-Type") or "application/octet-stream"
        return self._send(200, tx.data, ctype, {"X-Tx-Owner": tx.owner})

    def do_POST(self):
        gw = self.gateway
        if urlsplit(self.path).path.rstrip("/") != "/tx":
            return self._error(404, "NotFound", f"no route for {self.path}")
        if not gw.config.allow_writes:
            return self._error(405, "ReadOnly", "this gateway does not accept writes")
        length = int(self.headers.get("Content-Length") or 0)
        if not 0 < length <= MAX_BODY:
            return self._error(400, "BadRequest", "missing or oversize body")
        try:
            obj = json.loads(self.rfile.read(length))
            tags = [tuple(t) for t in obj.get("tags", [])]
            data = b64url_decode(obj.get("data", ""))
            with gw.lock:
                tid = gw.weave.submit(obj["owner"], tags, data)
                if gw.config.mine_on_write:
                    gw.weave.mine_block()
        except (ValueError, KeyError, TypeError) as exc:
            return self._error(400, "BadRequest", str(exc))
        except PermadidError as exc:
            return self._error(400, exc.code, str(exc))
        return self._json(201, {"id": tid})


class Gateway:
    """An HTTP server bound to a weave. Use :func:`serve` to build one."""

    def __init__(self, weave: Weave, config: GatewayConfig):
        self.weave = weave
        self.config = config
        self.names = NameRegistry(weave)
        self.resolver = DidResolver(weave, self.names)
        # GETs read indexes that writes mutate, so the one weave writer also excludes readers
        self.lock = threading.RLock()
        handler = type("Handler", (_Handler,), {"gateway": self})
        try:
            self.httpd = ThreadingHTTPServer((config.host, config.port), handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from None
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "Gateway":
        if self._thread is not None and self._thread.is_alive():
            return self  # shutdown() stops a single serve loop, so never run two
        self._thread = threading.Thread(target=self.httpd.serve_forever, name="gateway", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(config: GatewayConfig, weave: Weave | None = None) -> Gateway:
    """Build a gateway over ``weave`` or the snapshot named in ``config`` (not started)."""
    if weave is None:
        if config.snapshot and config.allow_writes:
            weave = Weave(config.snapshot)  # appends new blocks to the snapshot file
        elif config.snapshot:
            weave = Weave.load(config.snapshot)
        else:
            weave = Weave()
    return Gateway(weave, config)
