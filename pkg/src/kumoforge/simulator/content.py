"""Reproducible pseudo-random content streams and snapshot rendering.

File bytes are generated with SplitMix64 run in counter mode: output
word i is the SplitMix64 finalizer applied to ``key + (i+1) * GOLDEN``
(all arithmetic mod 2**64), serialized little-endian.  The construction
is published, seekable, and trivially portable, so any implementation
can regenerate fixture content bit-for-bit from (seed, file_id,
revision_id).
"""

from __future__ import annotations

import hashlib

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def stream_key(seed: int, file_id: str, revision_id: str) -> int:
    """Derive the 64-bit stream key for one revision's content."""
    digest = hashlib.sha256(f"{seed}|{file_id}|{revision_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def pseudo_random_bytes(key: int, length: int, offset: int = 0) -> bytes:
    """Return ``length`` bytes of the key's stream starting at ``offset``.

    Seekable: concatenating adjacent slices equals one big read.
    """
    if length <= 0:
        return b""
    first_word = offset // 8
    last_word = (offset + length - 1) // 8
    counters = np.arange(first_word + 1, last_word + 2, dtype=np.uint64)
    states = np.uint64(key & _MASK64) + counters * np.uint64(GOLDEN)
    buf = _mix64(states).astype("<u8").tobytes()
    start = offset - first_word * 8
    return buf[start : start + length]


class Splitmix64:
    """Tiny deterministic integer generator for fixture structure."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next64(self) -> int:
        self._state = (self._state + GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next64() % bound


def _pdf_escape(text: str) -> str:
    return text.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")


def pdf_snapshot(title: str, body_lines: list[str]) -> bytes:
    """Render a minimal single-page PDF with deterministic bytes.

    Hand-assembled so the output contains no timestamps or generator
    metadata; identical inputs always yield identical bytes.
    """
    text_ops = [f"BT /F1 14 Tf 72 740 Td ({_pdf_escape(title)}) Tj ET"]
    y = 710
    for line in body_lines:
        text_ops.append(f"BT /F1 10 Tf 72 {y} Td ({_pdf_escape(line)}) Tj ET")
        y -= 16
    stream = ("\n".join(text_ops) + "\n").encode("latin-1", "replace")

    objects = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
        b"/Resources << /Font << /F1 5 0 R >> >> /Contents 4 0 R >>",
        b"<< /Length %d >>\nstream\n%s\nendstream" % (len(stream), stream),
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>",
    ]

    out = bytearray(b"%PDF-1.4\n")
    offsets = [0]
    for num, body in enumerate(objects, start=1):
        offsets.append(len(out))
        out += b"%d 0 obj\n%s\nendobj\n" % (num, body)
    xref_at = len(out)
    out += b"xref\n0 %d\n" % (len(objects) + 1)
    out += b"0000000000 65535 f \n"
    for off in offsets[1:]:
        out += b"%010d 00000 n \n" % off
    out += (
        b"trailer\n<< /Size %d /Root 1 0 R >>\nstartxref\n%d\n%%%%EOF\n"
        % (len(objects) + 1, xref_at)
    )
    return bytes(out)


def text_snapshot(title: str, body_lines: list[str]) -> bytes:
    return ("\n".join([title, ""] + body_lines) + "\n").encode("utf-8")


def snapshot_body(seed: int, file_id: str) -> list[str]:
    """Deterministic filler paragraph for a cloud-native document."""
    rng = Splitmix64(stream_key(seed, file_id, "export"))
    words = (
        "case", "exhibit", "account", "drive", "review", "notes", "timeline",
        "meeting", "summary", "draft", "update", "final", "budget", "entry",
    )
    lines = []
    for _ in range(6):
        picked = [words[rng.below(len(words))] for _ in range(8)]
        lines.append(" ".join(picked))
    return lines
