"""Deterministic local cloud-drive simulator.

Serves an OAuth2-style auth flow, a paginated file catalog with
revisions and cloud-native documents, raw content with token-bucket
bandwidth throttling, and test-only fault injection; every response is
a pure function of the seeded fixture and the request sequence.
"""

from kumoforge.simulator.fixtures import DIALECT_HASHED, DIALECT_UNHASHED, Fixture, FixtureSpec
from kumoforge.simulator.server import DriveSimulator, serve
from kumoforge.simulator.throttle import ThrottleConfig, TokenBucket

__all__ = [
    "DIALECT_HASHED",
    "DIALECT_UNHASHED",
    "DriveSimulator",
    "Fixture",
    "FixtureSpec",
    "ThrottleConfig",
    "TokenBucket",
    "serve",
]
