"""Endpoint maps for the four real providers.

Only authorization-URL construction is wired; the endpoint tables shape
how a live driver would map the uniform contract onto each service.
This build performs no network calls against real providers.
"""

from __future__ import annotations

from urllib.parse import urlencode

from kumoforge.errors import LiveDriverNotWired
from kumoforge.providers.base import (
    CloudDriver,
    DriverCapabilities,
    ProviderSession,
    ServiceDescriptor,
    Sink,
)
from kumoforge.simulator.fixtures import DIALECT_HASHED, DIALECT_UNHASHED

OAUTH_CLIENT_ID = "kumoforge"

AUTH_URLS = {
    "gdrive": "https://accounts.google.com/o/oauth2/auth",
    "dropbox": "https://www.dropbox.com/oauth2/authorize",
    "onedrive": "https://login.microsoftonline.com/common/oauth2/v2.0/authorize",
    "box": "https://account.box.com/api/oauth2/authorize",
}

AUTH_SCOPES = {
    "gdrive": "https://www.googleapis.com/auth/drive.readonly",
    "dropbox": "files.metadata.read files.content.read",
    "onedrive": "Files.Read.All offline_access",
    "box": "root_readonly",
}

# How each service's API maps onto the uniform driver operations.
ENDPOINTS = {
    "gdrive": {
        "token": "https://oauth2.googleapis.com/token",
        "list": "https://www.googleapis.com/drive/v3/files",
        "metadata": "https://www.googleapis.com/drive/v3/files/{file_id}",
        "revisions": "https://www.googleapis.com/drive/v3/files/{file_id}/revisions",
        "content": "https://www.googleapis.com/drive/v3/files/{file_id}?alt=media",
        "export": "https://www.googleapis.com/drive/v3/files/{file_id}/export",
    },
    "dropbox": {
        "token": "https://api.dropboxapi.com/oauth2/token",
        "list": "https://api.dropboxapi.com/2/files/list_folder",
        "metadata": "https://api.dropboxapi.com/2/files/get_metadata",
        "revisions": "https://api.dropboxapi.com/2/files/list_revisions",
        "content": "https://content.dropboxapi.com/2/files/download",
        "export": "https://content.dropboxapi.com/2/files/export",
    },
    "onedrive": {
        "token": "https://login.microsoftonline.com/common/oauth2/v2.0/token",
        "list": "https://graph.microsoft.com/v1.0/me/drive/root/children",
        "metadata": "https://graph.microsoft.com/v1.0/me/drive/items/{file_id}",
        "revisions": "https://graph.microsoft.com/v1.0/me/drive/items/{file_id}/versions",
        "content": "https://graph.microsoft.com/v1.0/me/drive/items/{file_id}/content",
        "export": "https://graph.microsoft.com/v1.0/me/drive/items/{file_id}/content?format=pdf",
    },
    "box": {
        "token": "https://api.box.com/oauth2/token",
        "list": "https://api.box.com/2.0/folders/0/items",
        "metadata": "https://api.box.com/2.0/files/{file_id}",
        "revisions": "https://api.box.com/2.0/files/{file_id}/versions",
        "content": "https://api.box.com/2.0/files/{file_id}/content",
        "export": "https://api.box.com/2.0/files/{file_id}/content",
    },
}


class LiveDriver(CloudDriver):
    """Auth-URL construction plus endpoint tables; nothing else wired."""

    def __init__(self, descriptor: ServiceDescriptor):
        self.descriptor = descriptor
        self.endpoints = ENDPOINTS[descriptor.service_id]

    def begin_auth(self) -> str:
        base = AUTH_URLS[self.descriptor.service_id]
        params = {
            "client_id": OAUTH_CLIENT_ID,
            "response_type": "code",
            "scope": AUTH_SCOPES[self.descriptor.service_id],
        }
        return f"{base}?{urlencode(params)}"

    def capabilities(self) -> DriverCapabilities:
        return DriverCapabilities.for_dialect(self.descriptor.dialect)

    def _not_wired(self):
        raise LiveDriverNotWired(
            f"{self.descriptor.service_id}: live provider calls are not wired in this build"
        )

    def complete_auth(self, access_code: str) -> ProviderSession:
        self._not_wired()

    def list_files(self, session, page_token=None, page_size=100):
        self._not_wired()

    def get_file_metadata(self, session, file_id: str) -> bytes:
        self._not_wired()

    def list_revisions(self, session, file_id: str):
        self._not_wired()

    def download_revision(self, session, file_id: str, revision_id: str, sink: Sink) -> int:
        self._not_wired()

    def export_snapshot(self, session, file_id: str, format_id: str, sink: Sink) -> int:
        self._not_wired()


# Dialects: Google Drive metadata carries MD5; Dropbox exposes only an
# opaque "rev" change token; OneDrive and Box expose non-MD5 hashes, so
# the engine treats them as unhashed and computes SHA-256 locally.
LIVE_SERVICES = (
    ServiceDescriptor("gdrive", "Google Drive", DIALECT_HASHED),
    ServiceDescriptor("dropbox", "Dropbox", DIALECT_UNHASHED),
    ServiceDescriptor("onedrive", "Microsoft OneDrive", DIALECT_UNHASHED),
    ServiceDescriptor("box", "Box", DIALECT_UNHASHED),
)
