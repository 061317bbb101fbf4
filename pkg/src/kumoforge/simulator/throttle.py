"""Token-bucket bandwidth limiting for simulated content transfers."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

# Default bucket depth: small enough that the startup burst stays
# negligible against multi-second transfers, large enough to smooth
# chunk-sized sends.
DEFAULT_BUCKET_CAPACITY = 65536


@dataclass(frozen=True)
class ThrottleConfig:
    """rate_bytes_per_sec=None means unlimited."""

    rate_bytes_per_sec: int | None = None
    bucket_capacity_bytes: int = DEFAULT_BUCKET_CAPACITY

    def __post_init__(self):
        if self.rate_bytes_per_sec is not None and self.rate_bytes_per_sec <= 0:
            raise ValueError("rate must be positive (or None for unlimited)")
        if self.bucket_capacity_bytes <= 0:
            raise ValueError("bucket capacity must be positive")


class TokenBucket:
    """Blocking token bucket shared by all of a server's transfers.

    Long-run delivered throughput never exceeds the configured rate plus
    at most one bucket of initial slack.
    """

    def __init__(self, config: ThrottleConfig):
        self._rate = config.rate_bytes_per_sec
        self._capacity = config.bucket_capacity_bytes
        self._tokens = float(config.bucket_capacity_bytes)
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    @property
    def unlimited(self) -> bool:
        return self._rate is None

    @property
    def chunk_size(self) -> int:
        if self._rate is None:
            return 65536
        return min(65536, self._capacity)

    def consume(self, nbytes: int) -> None:
        """Block until ``nbytes`` tokens have been taken."""
        if self._rate is None or nbytes <= 0:
            return
        remaining = nbytes
        while remaining > 0:
            take = min(remaining, self._capacity)
            with self._lock:
                self._refill()
                if self._tokens >= take:
                    self._tokens -= take
                    remaining -= take
                    continue
                wait = (take - self._tokens) / self._rate
            time.sleep(wait)

    def _refill(self) -> None:
        now = time.monotonic()
        self._tokens = min(
            float(self._capacity), self._tokens + (now - self._stamp) * self._rate
        )
        self._stamp = now
