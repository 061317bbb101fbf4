"""Uniform driver contract every service driver implements."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

from kumoforge.model import CloudFile, Revision
from kumoforge.simulator.fixtures import DIALECT_HASHED, DIALECT_UNHASHED

# A sink receives streamed content chunks.
Sink = Callable[[bytes], None]


@dataclass(frozen=True)
class ServiceDescriptor:
    service_id: str
    display_name: str
    dialect: str  # DIALECT_HASHED | DIALECT_UNHASHED

    def __post_init__(self):
        if self.dialect not in (DIALECT_HASHED, DIALECT_UNHASHED):
            raise ValueError(f"unknown dialect: {self.dialect!r}")


@dataclass(frozen=True)
class DriverCapabilities:
    provides_content_hash: bool
    supports_revisions: bool = True
    supports_export: bool = True

    @classmethod
    def for_dialect(cls, dialect: str) -> "DriverCapabilities":
        return cls(provides_content_hash=dialect == DIALECT_HASHED)


@dataclass(frozen=True)
class ProviderSession:
    """Authenticated handle to one account on one service."""

    service: ServiceDescriptor
    user: str
    access_token: str
    obtained_at: datetime

    def __post_init__(self):
        if not self.access_token:
            raise ValueError("access_token must be non-empty")


class CloudDriver(ABC):
    """Service-specific protocol implementation.

    Drivers hold no per-call mutable state: one session may be shared by
    any number of concurrent read operations.
    """

    descriptor: ServiceDescriptor

    @abstractmethod
    def begin_auth(self) -> str:
        """Return the URL the user must visit to approve access."""

    @abstractmethod
    def complete_auth(self, access_code: str) -> ProviderSession:
        """Exchange an access code for an authenticated session."""

    @abstractmethod
    def capabilities(self) -> DriverCapabilities:
        ...

    @abstractmethod
    def list_files(
        self,
        session: ProviderSession,
        page_token: str | None = None,
        page_size: int = 100,
    ) -> tuple[list[CloudFile], str | None]:
        """One catalog page in stable file-id order, plus the next token."""

    @abstractmethod
    def get_file_metadata(self, session: ProviderSession, file_id: str) -> bytes:
        """Raw provider metadata body, persisted byte-exact as evidence."""

    @abstractmethod
    def list_revisions(self, session: ProviderSession, file_id: str) -> list[Revision]:
        """All revisions, ascending (timestamp, revision_id)."""

    @abstractmethod
    def download_revision(
        self, session: ProviderSession, file_id: str, revision_id: str, sink: Sink
    ) -> int:
        """Stream one revision's exact content into sink; returns byte count."""

    @abstractmethod
    def export_snapshot(
        self, session: ProviderSession, file_id: str, format_id: str, sink: Sink
    ) -> int:
        """Stream a rendered snapshot of a cloud-native artifact."""
