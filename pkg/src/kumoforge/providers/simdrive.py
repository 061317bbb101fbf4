"""Driver for the built-in drive simulator.

Speaks the simulator's JSON wire protocol over a keep-alive session;
this is the fully wired reference driver the engine is validated
against.
"""

from __future__ import annotations

from datetime import datetime, timezone

import requests

from kumoforge.errors import (
    AuthCodeRejected,
    AuthEndpointUnavailable,
    CloudNativeNoContent,
    ExportFormatUnsupported,
    NoSuchFile,
    NoSuchRevision,
    NotCloudNative,
    ProviderError,
    TokenExpired,
    TransientIO,
)
from kumoforge.model import (
    CloudFile,
    HashAlgorithm,
    HashClaim,
    HashProvenance,
    Revision,
    parse_timestamp_ms,
)
from kumoforge.providers.base import (
    CloudDriver,
    DriverCapabilities,
    ProviderSession,
    ServiceDescriptor,
    Sink,
)
from kumoforge.simulator.fixtures import DIALECT_HASHED, DIALECT_UNHASHED

OAUTH_CLIENT_ID = "kumoforge"
DEFAULT_SIMULATOR_URL = "http://127.0.0.1:8787"

SIMDRIVE = ServiceDescriptor("simdrive", "SimDrive", DIALECT_HASHED)

_STREAM_CHUNK = 65536

_ERROR_MAP = {
    "TOKEN_EXPIRED": TokenExpired,
    "TRANSIENT_IO": TransientIO,
    "NO_SUCH_FILE": NoSuchFile,
    "NO_SUCH_REVISION": NoSuchRevision,
    "CLOUD_NATIVE_NO_CONTENT": CloudNativeNoContent,
    "EXPORT_FORMAT_UNSUPPORTED": ExportFormatUnsupported,
    "NOT_CLOUD_NATIVE": NotCloudNative,
    "AUTH_CODE_REJECTED": AuthCodeRejected,
}


class SimDriveDriver(CloudDriver):
    def __init__(self, base_url: str = DEFAULT_SIMULATOR_URL, timeout: float = 30.0):
        self.descriptor = SIMDRIVE
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._http = requests.Session()
        self._dialect: str | None = None

    def close(self) -> None:
        self._http.close()

    # -- auth ----------------------------------------------------------------

    def begin_auth(self) -> str:
        return f"{self.base_url}/oauth/authorize?client_id={OAUTH_CLIENT_ID}"

    def complete_auth(self, access_code: str) -> ProviderSession:
        try:
            resp = self._http.post(
                f"{self.base_url}/oauth/token",
                json={"code": access_code},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise AuthEndpointUnavailable(f"token endpoint unreachable: {exc}")
        if resp.status_code != 200:
            raise _error_for(resp)
        body = resp.json()
        return ProviderSession(
            service=self.descriptor,
            user=body["user"],
            access_token=body["access_token"],
            obtained_at=datetime.now(timezone.utc),
        )

    def capabilities(self) -> DriverCapabilities:
        if self._dialect is None:
            return DriverCapabilities.for_dialect(self.descriptor.dialect)
        return DriverCapabilities.for_dialect(self._dialect)

    # -- catalog ---------------------------------------------------------------

    def list_files(
        self,
        session: ProviderSession,
        page_token: str | None = None,
        page_size: int = 100,
    ) -> tuple[list[CloudFile], str | None]:
        params: dict[str, str] = {"page_size": str(page_size)}
        if page_token:
            params["page_token"] = page_token
        body = self._get_json(session, "/files", params=params)
        files = [self._parse_file(entry) for entry in body.get("files", [])]
        if files:
            self._dialect = (
                DIALECT_UNHASHED
                if any("rev" in e for e in body["files"])
                else DIALECT_HASHED
            )
        return files, body.get("next_page_token")

    def get_file_metadata(self, session: ProviderSession, file_id: str) -> bytes:
        resp = self._request(session, "GET", f"/files/{file_id}")
        return resp.content

    def list_revisions(self, session: ProviderSession, file_id: str) -> list[Revision]:
        body = self._get_json(session, f"/files/{file_id}/revisions")
        revisions = []
        for item in body.get("revisions", []):
            claim = None
            if item.get("md5"):
                claim = HashClaim(
                    HashAlgorithm.MD5, item["md5"], HashProvenance.PROVIDER_CLAIMED
                )
            revisions.append(
                Revision(
                    revision_id=item["id"],
                    timestamp=parse_timestamp_ms(item["timestamp"]),
                    size_bytes=item["size"],
                    hash=claim,
                )
            )
        return sorted(revisions, key=Revision.sort_key)

    # -- content ---------------------------------------------------------------

    def download_revision(
        self, session: ProviderSession, file_id: str, revision_id: str, sink: Sink
    ) -> int:
        path = f"/files/{file_id}/revisions/{revision_id}/content"
        return self._stream(session, path, sink)

    def export_snapshot(
        self, session: ProviderSession, file_id: str, format_id: str, sink: Sink
    ) -> int:
        path = f"/files/{file_id}/export"
        return self._stream(session, path, sink, params={"format": format_id})

    # -- plumbing ----------------------------------------------------------

    def _headers(self, session: ProviderSession) -> dict[str, str]:
        return {"Authorization": f"Bearer {session.access_token}"}

    def _request(
        self, session: ProviderSession, method: str, path: str, *, params=None, stream=False
    ) -> requests.Response:
        try:
            resp = self._http.request(
                method,
                f"{self.base_url}{path}",
                params=params,
                headers=self._headers(session),
                timeout=self.timeout,
                stream=stream,
            )
        except requests.RequestException as exc:
            raise TransientIO(f"{path}: {exc}")
        if resp.status_code != 200:
            raise _error_for(resp)
        return resp

    def _get_json(self, session: ProviderSession, path: str, *, params=None) -> dict:
        return self._request(session, "GET", path, params=params).json()

    def _stream(self, session: ProviderSession, path: str, sink: Sink, *, params=None) -> int:
        resp = self._request(session, "GET", path, params=params, stream=True)
        expected = int(resp.headers.get("Content-Length", -1))
        written = 0
        try:
            for chunk in resp.iter_content(_STREAM_CHUNK):
                if chunk:
                    sink(chunk)
                    written += len(chunk)
        except requests.RequestException as exc:
            raise TransientIO(f"{path}: stream interrupted: {exc}")
        finally:
            resp.close()
        if 0 <= expected != written:
            raise TransientIO(f"{path}: short read ({written} of {expected} bytes)")
        return written

    def _parse_file(self, entry: dict) -> CloudFile:
        cloud_native = entry.get("kind") == "cloud-native"
        claim = None
        if not cloud_native:
            if entry.get("md5"):
                claim = HashClaim(
                    HashAlgorithm.MD5, entry["md5"], HashProvenance.PROVIDER_CLAIMED
                )
            elif entry.get("rev"):
                claim = HashClaim(
                    HashAlgorithm.OPAQUE_REV, entry["rev"], HashProvenance.PROVIDER_CLAIMED
                )
        return CloudFile(
            file_id=entry["id"],
            remote_path=entry["path"],
            name=entry["name"],
            size_bytes=entry["size"],
            modified_time=parse_timestamp_ms(entry["modified"]),
            revision_count=entry.get("revisions", 1),
            provider_hash=claim,
            cloud_native=cloud_native,
            export_formats=tuple(entry.get("exports", ())),
        )


def _error_for(resp: requests.Response) -> ProviderError:
    code = ""
    try:
        code = resp.json().get("error", "")
    except ValueError:
        pass
    exc_type = _ERROR_MAP.get(code)
    if exc_type is not None:
        return exc_type(f"{resp.request.method} {resp.url}: {code}")
    if resp.status_code >= 500:
        return TransientIO(f"{resp.url}: HTTP {resp.status_code}")
    err = ProviderError(f"{resp.url}: HTTP {resp.status_code} {code or resp.reason}")
    err.code = code or f"HTTP_{resp.status_code}"
    return err
