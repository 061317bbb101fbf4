"""Local HTTP API exposing discovery, selection and acquisition.

Programmatic twin of the CLI: the same engine runs underneath, so for
identical fixtures and selections the evidence tree, CSV and log lines
come out the same.  Serves the bundled web console's static assets when
given a directory.  Binds loopback only unless explicitly overridden.
"""

from __future__ import annotations

import argparse
import json
import logging
import mimetypes
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from kumoforge.engine import AcquisitionEngine, FileManifest, JobProgress, select
from kumoforge.errors import (
    AuthCodeRejected,
    KumoforgeError,
    NotAuthenticated,
    ProviderError,
    ServeBindError,
    TokenExpired,
    UnknownManifestIds,
    UsageError,
)
from kumoforge.model import FILTER_NAMES, FilterSpec
from kumoforge.providers import (
    DEFAULT_SIMULATOR_URL,
    SERVICES,
    ServiceDescriptor,
    load_token,
    make_driver,
    resolve_service,
    store_token,
    token_path,
)

log = logging.getLogger("kumoforge.control_api")

STATE_PENDING = "PENDING"
STATE_RUNNING = "RUNNING"
STATE_DONE = "DONE"
STATE_FAILED = "FAILED"


class _Job:
    def __init__(self, job_id: str, destination: Path):
        self.job_id = job_id
        self.destination = destination
        self.state = STATE_PENDING
        self.progress = JobProgress()
        self.summary: str | None = None
        self.records: list[dict] = []
        self.failures: list[dict] = []
        self.error: str | None = None

    def status(self) -> dict:
        payload: dict = {
            "job_id": self.job_id,
            "state": self.state,
            "progress": self.progress.snapshot(),
        }
        if self.summary is not None:
            payload["summary"] = self.summary
        if self.state in (STATE_DONE, STATE_FAILED):
            payload["records"] = self.records
            payload["failures"] = self.failures
        if self.error is not None:
            payload["error"] = self.error
        return payload


class ControlApi:
    """API process state: services, token cache, manifests, jobs."""

    def __init__(
        self,
        workdir: Path | str = ".",
        host: str = "127.0.0.1",
        port: int = 5000,
        simulator_url: str = DEFAULT_SIMULATOR_URL,
        services: dict[str, ServiceDescriptor] | None = None,
        static_dir: Path | str | None = None,
    ):
        self.workdir = Path(workdir)
        self.host = host
        self.requested_port = port
        self.simulator_url = simulator_url
        self.services = dict(SERVICES) if services is None else dict(services)
        self.static_dir = Path(static_dir) if static_dir else None
        self.config_dir = self.workdir / "config"
        self._lock = threading.Lock()
        self._jobs: dict[str, _Job] = {}
        self._manifests: dict[str, FileManifest] = {}
        self._job_counter = 0
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "ControlApi":
        try:
            self._httpd = _ApiHTTPServer((self.host, self.requested_port), _Handler)
        except OSError as exc:
            raise ServeBindError(f"cannot bind {self.host}:{self.requested_port}: {exc}")
        self._httpd.api = self
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        log.info("control API on %s", self.base_url)
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
            raise RuntimeError("control API not started")
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    # -- operations ----------------------------------------------------------

    def list_services(self) -> list[dict]:
        return [
            {
                "service_id": svc.service_id,
                "display_name": svc.display_name,
                "dialect": svc.dialect,
            }
            for svc in self.services.values()
        ]

    def _service(self, service_id: str) -> ServiceDescriptor:
        svc = resolve_service(service_id)
        if svc.service_id not in self.services:
            raise KeyError(service_id)
        return svc

    def _engine(self, service: ServiceDescriptor, progress: JobProgress | None = None):
        driver = make_driver(service, self.simulator_url)
        session = load_token(service, self.config_dir)
        return AcquisitionEngine(
            driver,
            session,
            localdata_dir=self.workdir / "localdata",
            downloads_dir=self.workdir / "downloaded",
            progress=progress,
        )

    def complete_auth(self, service_id: str, code: str) -> str:
        service = self._service(service_id)
        driver = make_driver(service, self.simulator_url)
        session = driver.complete_auth(code)
        store_token(session, self.config_dir)
        return session.user

    def discover(self, service_id: str, filter_name: str | None = None) -> list[dict]:
        service = self._service(service_id)
        engine = self._engine(service)
        result = engine.discover()
        with self._lock:
            self._manifests[service.service_id] = result.manifest

        files = result.manifest.files
        if filter_name and filter_name != "all":
            files = select(result.manifest, FilterSpec.from_name(filter_name))
        keep = {f.file_id for f in files}
        rows = []
        for row, file in zip(result.manifest.rows, result.manifest.files):
            if file.file_id not in keep:
                continue
            rows.append(
                {
                    "file_id": row.file_id,
                    "remote_path": row.remote_path,
                    "name": file.name,
                    "revisions": row.revision_count,
                    "hash": row.hash_display,
                    "category": file.category.value,
                    "cloud_native": file.cloud_native,
                    "size": file.size_bytes,
                }
            )
        return rows

    def start_acquisition(self, service_id: str, file_ids: list[str]) -> str:
        service = self._service(service_id)
        with self._lock:
            manifest = self._manifests.get(service.service_id)
        if manifest is None:
            engine = self._engine(service)
            manifest = engine.discover().manifest
            with self._lock:
                self._manifests[service.service_id] = manifest

        filter_spec = FilterSpec.manifest(file_ids)
        targets = select(manifest, filter_spec)  # raises UnknownManifestIds

        progress = JobProgress()
        session = load_token(service, self.config_dir)
        destination = self.workdir / "downloaded" / session.user

        with self._lock:
            for other in self._jobs.values():
                if other.destination == destination and other.state in (
                    STATE_PENDING,
                    STATE_RUNNING,
                ):
                    raise JobConflict(other.job_id)
            self._job_counter += 1
            job = _Job(f"job-{self._job_counter:04d}", destination)
            self._jobs[job.job_id] = job

        worker = threading.Thread(
            target=self._run_job,
            args=(job, service, targets, filter_spec, progress),
            daemon=True,
        )
        job.progress = progress
        worker.start()
        return job.job_id

    def _run_job(self, job: _Job, service, targets, filter_spec, progress) -> None:
        with self._lock:
            job.state = STATE_RUNNING
        try:
            engine = self._engine(service, progress=progress)
            result = engine.acquire(targets, filter_used=filter_spec)
            with self._lock:
                job.summary = result.summary
                job.records = [
                    {
                        "time_utc": rec.fields()[0],
                        "application": rec.application,
                        "user": rec.user,
                        "file_id": rec.file_id,
                        "remote_path": rec.remote_path,
                        "revision": rec.revision_label,
                        "local_path": rec.local_path,
                        "hash": rec.hash,
                    }
                    for rec in result.records
                ]
                job.failures = [
                    {
                        "file_id": f.file_id,
                        "remote_path": f.remote_path,
                        "error_code": f.error_code,
                        "message": f.message,
                    }
                    for f in result.failures
                ]
                job.state = STATE_DONE
        except Exception as exc:  # surface any engine failure in the job
            log.exception("job %s failed", job.job_id)
            with self._lock:
                job.error = getattr(exc, "code", None) or str(exc)
                job.state = STATE_FAILED

    def job_status(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return job.status() if job is not None else None

    def auth_url(self, service: ServiceDescriptor) -> str:
        return make_driver(service, self.simulator_url).begin_auth()

    def drop_token(self, service: ServiceDescriptor) -> None:
        token_path(service.service_id, self.config_dir).unlink(missing_ok=True)


class JobConflict(KumoforgeError):
    code = "JOB_ALREADY_RUNNING"

    def __init__(self, job_id: str):
        super().__init__(f"a job is already running for this destination: {job_id}")
        self.job_id = job_id


class _ApiHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    api: ControlApi


_JOB_RE = re.compile(r"^/api/jobs/([^/]+)$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    # Nagle + delayed ACK adds ~40ms per exchange on loopback.
    disable_nagle_algorithm = True
    server: _ApiHTTPServer

    @property
    def api(self) -> ControlApi:
        return self.server.api

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            parsed = json.loads(raw.decode("utf-8")) if raw else {}
        except (UnicodeDecodeError, json.JSONDecodeError):
            return {}
        return parsed if isinstance(parsed, dict) else {}

    # -- routing -----------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        path = url.path

        if path == "/api/services":
            return self._send_json(200, self.api.list_services())

        if path == "/api/files":
            return self._handle_files(query)

        m = _JOB_RE.match(path)
        if m:
            status = self.api.job_status(m.group(1))
            if status is None:
                return self._send_json(404, {"error": "UNKNOWN_JOB"})
            return self._send_json(200, status)

        return self._handle_static(path)

    def do_POST(self):
        path = urlparse(self.path).path
        if path == "/api/auth":
            return self._handle_auth()
        if path == "/api/acquire":
            return self._handle_acquire()
        self._send_json(404, {"error": "NOT_FOUND"})

    # -- endpoints -----------------------------------------------------------

    def _handle_auth(self):
        body = self._read_json()
        service_id = body.get("service_id", "")
        code = body.get("code", "")
        try:
            user = self.api.complete_auth(service_id, code)
        except (KeyError, UsageError):
            return self._send_json(400, {"error": "UNKNOWN_SERVICE"})
        except AuthCodeRejected:
            return self._send_json(400, {"error": "AUTH_CODE_REJECTED"})
        except ProviderError as exc:
            return self._send_json(502, {"error": exc.code})
        self._send_json(200, {"user": user})

    def _handle_files(self, query):
        service_id = query.get("service", [""])[0]
        filter_name = query.get("filter", [None])[0]
        if filter_name is not None and filter_name not in FILTER_NAMES:
            return self._send_json(400, {"error": "UNKNOWN_FILTER"})
        try:
            service = self.api._service(service_id)
        except (KeyError, UsageError):
            return self._send_json(400, {"error": "UNKNOWN_SERVICE"})
        try:
            rows = self.api.discover(service_id, filter_name)
        except (NotAuthenticated, TokenExpired):
            self.api.drop_token(service)
            return self._send_json(401, {"auth_url": self.api.auth_url(service)})
        except ProviderError as exc:
            return self._send_json(502, {"error": exc.code})
        except KumoforgeError as exc:
            return self._send_json(502, {"error": exc.code})
        self._send_json(200, {"files": rows})

    def _handle_acquire(self):
        body = self._read_json()
        service_id = body.get("service_id", "")
        file_ids = body.get("file_ids")
        if not isinstance(file_ids, list) or not file_ids:
            return self._send_json(400, {"error": "EMPTY_SELECTION"})
        try:
            job_id = self.api.start_acquisition(service_id, [str(i) for i in file_ids])
        except (KeyError, UsageError):
            return self._send_json(400, {"error": "UNKNOWN_SERVICE"})
        except UnknownManifestIds as exc:
            return self._send_json(
                400, {"error": exc.code, "missing": exc.missing}
            )
        except JobConflict as exc:
            return self._send_json(409, {"error": exc.code, "job_id": exc.job_id})
        except (NotAuthenticated, TokenExpired):
            service = self.api._service(service_id)
            return self._send_json(401, {"auth_url": self.api.auth_url(service)})
        except ProviderError as exc:
            return self._send_json(502, {"error": exc.code})
        self._send_json(200, {"job_id": job_id})

    # -- static assets ---------------------------------------------------------

    def _handle_static(self, path: str):
        static_dir = self.api.static_dir
        if static_dir is None or not static_dir.is_dir():
            return self._send_json(404, {"error": "NOT_FOUND"})
        rel = path.lstrip("/") or "index.html"
        target = (static_dir / rel).resolve()
        try:
            target.relative_to(static_dir.resolve())
        except ValueError:
            return self._send_json(404, {"error": "NOT_FOUND"})
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._send_json(404, {"error": "NOT_FOUND"})
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kumoforge-api", description="local acquisition control API + web console"
    )
    parser.add_argument("--port", type=int, default=5000)
    parser.add_argument("--workdir", default=".")
    parser.add_argument("--simulator-url", default=DEFAULT_SIMULATOR_URL)
    parser.add_argument("--static-dir", default=None,
                        help="web console assets (default: ./frontend/dist if present)")
    parser.add_argument(
        "--bind-external",
        action="store_true",
        help="bind 0.0.0.0 instead of loopback (exposes the API; use with care)",
    )
    args = parser.parse_args(argv)

    static_dir = args.static_dir
    if static_dir is None:
        candidate = Path("frontend/dist")
        static_dir = candidate if candidate.is_dir() else None

    host = "0.0.0.0" if args.bind_external else "127.0.0.1"
    if args.bind_external:
        print("warning: binding to all interfaces; the API has no access control")
    api = ControlApi(
        workdir=args.workdir,
        host=host,
        port=args.port,
        simulator_url=args.simulator_url,
        static_dir=static_dir,
    ).start()
    print(f"control API running on {api.base_url}")
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        api.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
