"""Service registry and driver construction."""

from __future__ import annotations

from kumoforge.errors import UsageError
from kumoforge.providers.base import (
    CloudDriver,
    DriverCapabilities,
    ProviderSession,
    ServiceDescriptor,
)
from kumoforge.providers.live import LIVE_SERVICES, LiveDriver
from kumoforge.providers.simdrive import DEFAULT_SIMULATOR_URL, SIMDRIVE, SimDriveDriver
from kumoforge.providers.tokenstore import load_token, store_token, token_path

SERVICES: dict[str, ServiceDescriptor] = {
    **{svc.service_id: svc for svc in LIVE_SERVICES},
    SIMDRIVE.service_id: SIMDRIVE,
}

# Accepted shorthand spellings.
SERVICE_ALIASES = {"dbox": "dropbox"}


def resolve_service(name: str) -> ServiceDescriptor:
    """Resolve a service id or alias; raises UsageError when unknown."""
    service_id = SERVICE_ALIASES.get(name, name)
    try:
        return SERVICES[service_id]
    except KeyError:
        known = ", ".join(sorted(SERVICES) + sorted(SERVICE_ALIASES))
        raise UsageError(f"unknown service {name!r} (expected one of: {known})")


def make_driver(
    service: ServiceDescriptor, simulator_url: str = DEFAULT_SIMULATOR_URL
) -> CloudDriver:
    if service.service_id == "simdrive":
        return SimDriveDriver(simulator_url)
    return LiveDriver(service)


__all__ = [
    "CloudDriver",
    "DEFAULT_SIMULATOR_URL",
    "DriverCapabilities",
    "LiveDriver",
    "ProviderSession",
    "SERVICES",
    "SERVICE_ALIASES",
    "ServiceDescriptor",
    "SimDriveDriver",
    "load_token",
    "make_driver",
    "resolve_service",
    "store_token",
    "token_path",
]
