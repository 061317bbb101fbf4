"""HTTP face of the drive simulator.

JSON-over-HTTP shaped after common cloud-drive APIs, one protocol with
two metadata dialects.  All state except fault injection is immutable
after seeding, so the threaded server needs no request coordination
beyond the shared token bucket and the fault counters.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from kumoforge.errors import BadFaultKind, FixtureTooLarge, ServeBindError
from kumoforge.simulator.fixtures import (
    DIALECT_HASHED,
    DIALECT_UNHASHED,
    Fixture,
    FixtureSpec,
)
from kumoforge.simulator.throttle import ThrottleConfig, TokenBucket

log = logging.getLogger("kumoforge.simulator")

DEFAULT_PAGE_SIZE = 100
MAX_PAGE_SIZE = 1000

FAULT_EXPIRE_TOKENS = "EXPIRE_TOKENS"
FAULT_DROP_NEXT_N = "DROP_NEXT_N"
FAULT_TRUNCATE_PAGE = "TRUNCATE_PAGE"
FAULT_CORRUPT_NEXT_N = "CORRUPT_NEXT_N"

FAULT_KINDS = (
    FAULT_EXPIRE_TOKENS,
    FAULT_DROP_NEXT_N,
    FAULT_TRUNCATE_PAGE,
    FAULT_CORRUPT_NEXT_N,
)


class _FaultState:
    """Mutable fault-injection counters; the only synchronized state."""

    def __init__(self):
        self._lock = threading.Lock()
        self._drop_next = 0
        self._truncate_pages = 0
        self._corrupt_next = 0

    def inject(self, kind: str, n: int = 1) -> None:
        with self._lock:
            if kind == FAULT_DROP_NEXT_N:
                self._drop_next += max(1, n)
            elif kind == FAULT_TRUNCATE_PAGE:
                self._truncate_pages += max(1, n)
            elif kind == FAULT_CORRUPT_NEXT_N:
                self._corrupt_next += max(1, n)
            else:
                raise BadFaultKind(kind)

    def take_drop(self) -> bool:
        with self._lock:
            if self._drop_next > 0:
                self._drop_next -= 1
                return True
            return False

    def take_truncate(self) -> bool:
        with self._lock:
            if self._truncate_pages > 0:
                self._truncate_pages -= 1
                return True
            return False

    def take_corrupt(self) -> bool:
        with self._lock:
            if self._corrupt_next > 0:
                self._corrupt_next -= 1
                return True
            return False


class DriveSimulator:
    """Owns fixture, auth state, throttling and the HTTP listener."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        throttle: ThrottleConfig | None = None,
        test_mode: bool = False,
        max_files: int = 4096,
    ):
        self.host = host
        self.requested_port = port
        self.test_mode = test_mode
        self.max_files = max_files
        self.bucket = TokenBucket(throttle or ThrottleConfig())
        self.faults = _FaultState()
        self._fixture: Fixture | None = None
        self._lock = threading.Lock()
        self._codes: set[str] = set()
        self._tokens: set[str] = set()
        self._counter = 0
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "DriveSimulator":
        try:
            self._httpd = _SimHTTPServer((self.host, self.requested_port), _Handler)
        except OSError as exc:
            raise ServeBindError(f"cannot bind {self.host}:{self.requested_port}: {exc}")
        self._httpd.sim = self
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        log.debug("simulator listening on %s", self.base_url)
        return self

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            if self._thread is not None:
                self._thread.join(timeout=5)
            self._httpd = None
            self._thread = None

    @property
    def port(self) -> int:
        if self._httpd is None:
            raise RuntimeError("simulator not started")
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    # -- state -------------------------------------------------------------

    def seed(self, spec: FixtureSpec) -> dict:
        if spec.file_count > self.max_files:
            raise FixtureTooLarge(
                f"file_count {spec.file_count} exceeds configured max {self.max_files}"
            )
        fixture = Fixture.generate(spec)
        with self._lock:
            self._fixture = fixture
        return fixture.summary()

    @property
    def fixture(self) -> Fixture:
        with self._lock:
            if self._fixture is None:
                raise RuntimeError("no fixture seeded")
            return self._fixture

    def inject_fault(self, kind: str, n: int = 1) -> None:
        if kind == FAULT_EXPIRE_TOKENS:
            with self._lock:
                self._tokens.clear()
            return
        self.faults.inject(kind, n)

    def issue_code(self) -> str:
        with self._lock:
            self._counter += 1
            seed = self._fixture.spec.seed if self._fixture else 0
            code = f"SIM-{seed}-{self._counter:04d}-OK"
            self._codes.add(code)
            return code

    def redeem_code(self, code: str) -> str | None:
        """Exchange a single-use code for a bearer token."""
        with self._lock:
            if code not in self._codes:
                return None
            self._codes.discard(code)
            self._counter += 1
            seed = self._fixture.spec.seed if self._fixture else 0
            token = f"tok-{seed}-{self._counter:04d}"
            self._tokens.add(token)
            return token

    def token_valid(self, token: str | None) -> bool:
        with self._lock:
            return token is not None and token in self._tokens


class _SimHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    sim: DriveSimulator


_CONTENT_RE = re.compile(r"^/files/([^/]+)/revisions/([^/]+)/content$")
_REVISIONS_RE = re.compile(r"^/files/([^/]+)/revisions$")
_EXPORT_RE = re.compile(r"^/files/([^/]+)/export$")
_FILE_RE = re.compile(r"^/files/([^/]+)$")
_TRUTH_RE = re.compile(r"^/admin/truth/([^/]+)$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    # Nagle + delayed ACK adds ~40ms per exchange on loopback.
    disable_nagle_algorithm = True
    server: _SimHTTPServer

    @property
    def sim(self) -> DriveSimulator:
        return self.server.sim

    def log_message(self, fmt, *args):  # quiet; route through logging
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing ----------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_code(self, status: int, code: str) -> None:
        self._send_json(status, {"error": code})

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return {}
        return parsed if isinstance(parsed, dict) else {}

    def _bearer_token(self) -> str | None:
        header = self.headers.get("Authorization") or ""
        if header.startswith("Bearer "):
            return header[len("Bearer "):]
        return None

    def _authorized(self) -> bool:
        if self.sim.token_valid(self._bearer_token()):
            return True
        self._send_error_code(401, "TOKEN_EXPIRED")
        return False

    def _drop_if_faulted(self) -> bool:
        if self.sim.faults.take_drop():
            self._send_error_code(503, "TRANSIENT_IO")
            return True
        return False

    def _stream(self, data_at, size: int) -> None:
        """Send ``size`` bytes produced by ``data_at(offset, length)``,
        throttled by the shared bucket."""
        corrupt = self.sim.faults.take_corrupt()
        self.send_response(200)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(size))
        self.end_headers()
        bucket = self.sim.bucket
        offset = 0
        try:
            while offset < size:
                chunk = data_at(offset, min(bucket.chunk_size, size - offset))
                if corrupt and offset == 0 and chunk:
                    chunk = bytes([chunk[0] ^ 0xFF]) + chunk[1:]
                bucket.consume(len(chunk))
                self.wfile.write(chunk)
                offset += len(chunk)
        except (BrokenPipeError, ConnectionResetError):
            log.debug("client disconnected mid-transfer")

    # -- routes ------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        path = url.path

        if path == "/oauth/authorize":
            return self._handle_authorize(query)

        if path == "/files":
            return self._handle_list(query)

        m = _CONTENT_RE.match(path)
        if m:
            return self._handle_content(m.group(1), m.group(2))

        m = _REVISIONS_RE.match(path)
        if m:
            return self._handle_revisions(m.group(1))

        m = _EXPORT_RE.match(path)
        if m:
            return self._handle_export(m.group(1), query)

        m = _FILE_RE.match(path)
        if m:
            return self._handle_detail(m.group(1))

        m = _TRUTH_RE.match(path)
        if m:
            return self._handle_truth(m.group(1))

        self._send_error_code(404, "NOT_FOUND")

    def do_POST(self):
        path = urlparse(self.path).path
        if path == "/oauth/token":
            return self._handle_token()
        if path == "/admin/seed":
            return self._handle_seed()
        if path == "/admin/fault":
            return self._handle_fault()
        self._send_error_code(404, "NOT_FOUND")

    # -- auth ----------------------------------------------------------------

    def _handle_authorize(self, query):
        if not query.get("client_id"):
            return self._send_error_code(400, "BAD_REQUEST")
        self._send_json(200, {"code": self.sim.issue_code()})

    def _handle_token(self):
        body = self._read_json()
        code = body.get("code")
        token = self.sim.redeem_code(code) if isinstance(code, str) else None
        if token is None:
            return self._send_error_code(400, "AUTH_CODE_REJECTED")
        self._send_json(200, {"access_token": token, "user": self.sim.fixture.user})

    # -- catalog ---------------------------------------------------------------

    def _handle_list(self, query):
        if not self._authorized() or self._drop_if_faulted():
            return
        fixture = self.sim.fixture
        try:
            page_size = int(query.get("page_size", [DEFAULT_PAGE_SIZE])[0])
        except ValueError:
            return self._send_error_code(400, "BAD_REQUEST")
        page_size = max(1, min(MAX_PAGE_SIZE, page_size))

        token = query.get("page_token", [None])[0]
        offset = 0
        if token:
            if not token.startswith("pt-"):
                return self._send_error_code(400, "BAD_PAGE_TOKEN")
            try:
                offset = int(token[3:])
            except ValueError:
                return self._send_error_code(400, "BAD_PAGE_TOKEN")

        window = fixture.files[offset : offset + page_size]
        entries = [fixture.catalog_entry(f) for f in window]
        payload: dict = {"files": entries}
        if offset + page_size < len(fixture.files):
            payload["next_page_token"] = f"pt-{offset + page_size}"
        if self.sim.faults.take_truncate() and payload["files"]:
            payload["files"] = payload["files"][:-1]
        self._send_json(200, payload)

    def _handle_detail(self, file_id: str):
        if not self._authorized() or self._drop_if_faulted():
            return
        fixture = self.sim.fixture
        sim_file = fixture.by_id.get(file_id)
        if sim_file is None:
            return self._send_error_code(404, "NO_SUCH_FILE")
        self._send_json(200, fixture.detail_entry(sim_file))

    def _handle_revisions(self, file_id: str):
        if not self._authorized() or self._drop_if_faulted():
            return
        fixture = self.sim.fixture
        sim_file = fixture.by_id.get(file_id)
        if sim_file is None:
            return self._send_error_code(404, "NO_SUCH_FILE")
        self._send_json(200, fixture.revisions_entry(sim_file))

    def _handle_content(self, file_id: str, revision_id: str):
        if not self._authorized() or self._drop_if_faulted():
            return
        fixture = self.sim.fixture
        sim_file = fixture.by_id.get(file_id)
        if sim_file is None:
            return self._send_error_code(404, "NO_SUCH_FILE")
        if sim_file.cloud_native:
            return self._send_error_code(404, "CLOUD_NATIVE_NO_CONTENT")
        rev = fixture.revision(file_id, revision_id)
        if rev is None:
            return self._send_error_code(404, "NO_SUCH_REVISION")
        self._stream(lambda off, ln: fixture.content_chunk(rev, off, ln), rev.size)

    def _handle_export(self, file_id: str, query):
        if not self._authorized() or self._drop_if_faulted():
            return
        fixture = self.sim.fixture
        sim_file = fixture.by_id.get(file_id)
        if sim_file is None:
            return self._send_error_code(404, "NO_SUCH_FILE")
        if not sim_file.cloud_native:
            return self._send_error_code(400, "NOT_CLOUD_NATIVE")
        fmt = query.get("format", [""])[0]
        if fmt not in sim_file.exports:
            return self._send_error_code(400, "EXPORT_FORMAT_UNSUPPORTED")
        data = fixture.export_bytes(file_id, fmt)
        self._stream(lambda off, ln: data[off : off + ln], len(data))

    # -- admin (test mode only) --------------------------------------------

    def _admin_allowed(self) -> bool:
        if self.sim.test_mode:
            return True
        self._send_error_code(403, "ADMIN_DISABLED")
        return False

    def _handle_seed(self):
        if not self._admin_allowed():
            return
        try:
            spec = FixtureSpec.from_json(self._read_json())
            summary = self.sim.seed(spec)
        except FixtureTooLarge:
            return self._send_error_code(400, "FIXTURE_TOO_LARGE")
        except (TypeError, ValueError) as exc:
            return self._send_json(400, {"error": "BAD_FIXTURE_SPEC", "detail": str(exc)})
        self._send_json(200, summary)

    def _handle_fault(self):
        if not self._admin_allowed():
            return
        body = self._read_json()
        kind = body.get("kind")
        n = body.get("n", 1)
        if kind not in FAULT_KINDS or not isinstance(n, int):
            return self._send_error_code(400, "BAD_FAULT_KIND")
        self.sim.inject_fault(kind, n)
        self._send_json(200, {"ok": True})

    def _handle_truth(self, file_id: str):
        if not self._admin_allowed():
            return
        fixture = self.sim.fixture
        sim_file = fixture.by_id.get(file_id)
        if sim_file is None:
            return self._send_error_code(404, "NO_SUCH_FILE")
        self._send_json(200, fixture.truth_entry(sim_file))


def serve(
    host: str = "127.0.0.1",
    port: int = 0,
    throttle: ThrottleConfig | None = None,
    dialect: str = DIALECT_HASHED,
    spec: FixtureSpec | None = None,
    test_mode: bool = False,
    max_files: int = 4096,
) -> DriveSimulator:
    """Start a simulator with an initial fixture; returns the handle."""
    sim = DriveSimulator(
        host=host, port=port, throttle=throttle, test_mode=test_mode, max_files=max_files
    )
    sim.seed(spec or FixtureSpec(dialect=dialect))
    return sim.start()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kumoforge-sim", description="local deterministic cloud-drive simulator"
    )
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--files", type=int, default=64)
    parser.add_argument("--size", type=int, default=262144, help="bytes per file")
    parser.add_argument(
        "--dialect", choices=[DIALECT_HASHED, DIALECT_UNHASHED], default=DIALECT_HASHED
    )
    parser.add_argument(
        "--throttle-bytes-per-sec", type=int, default=0, help="0 = unlimited"
    )
    parser.add_argument("--test-mode", action="store_true")
    args = parser.parse_args(argv)

    throttle = None
    if args.throttle_bytes_per_sec > 0:
        throttle = ThrottleConfig(rate_bytes_per_sec=args.throttle_bytes_per_sec)
    spec = FixtureSpec(
        seed=args.seed,
        file_count=args.files,
        file_size_bytes=args.size,
        dialect=args.dialect,
    )
    sim = serve(port=args.port, throttle=throttle, spec=spec, test_mode=args.test_mode)
    summary = sim.fixture.summary()
    print(f"simdrive listening on {sim.base_url}")
    print(
        f"fixture: {summary['file_count']} files, {summary['total_bytes']} bytes, "
        f"dialect {summary['dialect']}, user {summary['user']}"
    )
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        sim.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
