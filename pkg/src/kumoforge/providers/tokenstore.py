"""Persistent access-token cache.

One plain-text ``<service_id>.dat`` per service under the config
directory, line-oriented ``key=value``.  Tokens are stored unencrypted;
treat the config directory as sensitive material.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

from kumoforge.errors import NotAuthenticated, TokenStoreIO
from kumoforge.model import format_timestamp_ms, parse_timestamp_ms
from kumoforge.providers.base import ProviderSession, ServiceDescriptor

_KEYS = ("service", "user", "token", "obtained_at")


def token_path(service_id: str, config_dir: Path) -> Path:
    return Path(config_dir) / f"{service_id}.dat"


def store_token(session: ProviderSession, config_dir: Path) -> Path:
    """Persist the session; later load_token calls return it without
    any user interaction."""
    path = token_path(session.service.service_id, config_dir)
    lines = [
        f"service={session.service.service_id}",
        f"user={session.user}",
        f"token={session.access_token}",
        f"obtained_at={format_timestamp_ms(session.obtained_at)}",
    ]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise TokenStoreIO(f"cannot write token cache {path}: {exc}")
    return path


def load_token(service: ServiceDescriptor, config_dir: Path) -> ProviderSession:
    """Load the cached session for a service.

    Raises NotAuthenticated when no cache exists, signalling the caller
    to fall back to the interactive auth flow.
    """
    path = token_path(service.service_id, config_dir)
    if not path.exists():
        raise NotAuthenticated(f"no cached token for {service.service_id}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TokenStoreIO(f"cannot read token cache {path}: {exc}")

    values: dict[str, str] = {}
    for line in text.splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    missing = [k for k in _KEYS if not values.get(k)]
    if missing or values["service"] != service.service_id:
        raise NotAuthenticated(f"token cache {path} is incomplete or mismatched")

    try:
        obtained = parse_timestamp_ms(values["obtained_at"])
    except ValueError:
        obtained = datetime.now(timezone.utc)
    return ProviderSession(
        service=service,
        user=values["user"],
        access_token=values["token"],
        obtained_at=obtained,
    )
