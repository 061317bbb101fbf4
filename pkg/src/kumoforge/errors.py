"""Error types shared across drivers, engine, CLI and control API.

Every error carries a stable machine-readable ``code`` so that callers
(and the control API's JSON error bodies) never have to parse messages.
"""

from __future__ import annotations


class KumoforgeError(Exception):
    """Base class for all tool errors."""

    code = "ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class UsageError(KumoforgeError):
    """Bad command line; maps to exit status 1."""

    code = "USAGE"


class ProviderError(KumoforgeError):
    """A provider-side failure with a wire-level error code."""

    retryable = False


class AuthEndpointUnavailable(ProviderError):
    code = "AUTH_ENDPOINT_UNAVAILABLE"


class AuthCodeRejected(ProviderError):
    code = "AUTH_CODE_REJECTED"


class NotAuthenticated(ProviderError):
    """No cached token for the service; caller should run the auth flow."""

    code = "NOT_AUTHENTICATED"


class TokenExpired(ProviderError):
    code = "TOKEN_EXPIRED"


class TokenStoreIO(ProviderError):
    code = "TOKEN_STORE_IO"


class TransientIO(ProviderError):
    """Retryable transport failure (connection drop, 5xx, short read)."""

    code = "TRANSIENT_IO"
    retryable = True


class NoSuchFile(ProviderError):
    code = "NO_SUCH_FILE"


class NoSuchRevision(ProviderError):
    code = "NO_SUCH_REVISION"


class CloudNativeNoContent(ProviderError):
    """Cloud-native artifacts have no byte content; only exports."""

    code = "CLOUD_NATIVE_NO_CONTENT"


class ExportFormatUnsupported(ProviderError):
    code = "EXPORT_FORMAT_UNSUPPORTED"


class NotCloudNative(ProviderError):
    """Export requested for a regular file."""

    code = "NOT_CLOUD_NATIVE"


class LiveDriverNotWired(ProviderError):
    """The four real-provider drivers ship as endpoint maps only; this
    build never performs network calls against live services."""

    code = "LIVE_DRIVER_NOT_WIRED"


class ServeBindError(KumoforgeError):
    """A local service could not bind its address."""

    code = "SERVE_BIND_ERROR"


class BadFaultKind(KumoforgeError):
    code = "BAD_FAULT_KIND"


class FixtureTooLarge(KumoforgeError):
    code = "FIXTURE_TOO_LARGE"


class DiscoveryIncomplete(KumoforgeError):
    """Catalog paging failed part-way; partial listings are discarded."""

    code = "DISCOVERY_INCOMPLETE"


class UnknownManifestIds(KumoforgeError):
    """Manifest-driven selection referenced ids absent from the account."""

    code = "UNKNOWN_MANIFEST_ID"

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__(f"unknown file ids: {', '.join(self.missing)}")


class IntegrityMismatch(KumoforgeError):
    """Locally computed hash contradicts the provider's claim."""

    code = "INTEGRITY_MISMATCH"
