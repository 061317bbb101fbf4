"""Seeded drive fixtures: catalog structure, revisions, ground truth.

A ``FixtureSpec`` fully determines the simulated account: identical
specs produce bit-identical catalogs, content bytes and hashes on every
run, which is what makes acquisition results reproducible end to end.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any, Mapping

from kumoforge.model import format_timestamp_ms
from kumoforge.simulator.content import (
    Splitmix64,
    pdf_snapshot,
    pseudo_random_bytes,
    snapshot_body,
    stream_key,
    text_snapshot,
)

DIALECT_HASHED = "HASHED"
DIALECT_UNHASHED = "UNHASHED"

EXPORT_FORMATS = ("pdf", "txt")

_BASE_TIME = datetime(2015, 6, 1, 0, 0, 0, tzinfo=timezone.utc)

_FOLDER_NAMES = (
    "test folder",
    "stuff",
    "more stuff",
    "projects",
    "reports",
    "cases",
    "exhibits",
    "archive",
)

_REGULAR_NAMES = (
    "tree.py",
    "report.docx",
    "budget.xlsx",
    "slides.pptx",
    "notes.txt",
    "scan.pdf",
    "photo.png",
    "diagram.jpg",
    "mtg: agenda.docx",
    "memo.doc",
    "song.mp3",
    "clip.mp4",
    "readme.md",
    "ledger.csv",
    "archive",
    "shapes.bmp",
    "talk.odp",
    "draft.odt",
)

_CLOUD_NATIVE_NAMES = (
    "Case Summary",
    "Interview Notes.gdoc",
    "Ledger Review.gsheet",
    "Briefing Deck.gslides",
)


@dataclass(frozen=True)
class FixtureSpec:
    """Parameters for one simulated account.

    ``revision_depths`` maps a fraction of the account's files to a
    revision count; e.g. ``{0.25: 3}`` gives every fourth file three
    revisions.  Defaults describe the desk-scale account used by the
    validation suite: 64 files of 256 KiB (16 MiB total).
    """

    seed: int = 1
    file_count: int = 64
    file_size_bytes: int = 262144
    revision_depths: tuple[tuple[float, int], ...] = ()
    cloud_native_count: int = 0
    dialect: str = DIALECT_HASHED
    max_depth: int = 3
    branching: int = 2

    def __post_init__(self):
        if self.file_count < 0 or self.file_size_bytes < 0:
            raise ValueError("file_count and file_size_bytes must be non-negative")
        if not 0 <= self.cloud_native_count <= self.file_count:
            raise ValueError("cloud_native_count must be within [0, file_count]")
        if self.dialect not in (DIALECT_HASHED, DIALECT_UNHASHED):
            raise ValueError(f"unknown dialect: {self.dialect!r}")
        depths = tuple(sorted((float(f), int(d)) for f, d in dict(self.revision_depths).items()))
        for fraction, depth in depths:
            if not 0.0 <= fraction <= 1.0:
                raise ValueError("revision fraction must be within [0, 1]")
            if depth < 1:
                raise ValueError("revision depth must be >= 1")
        object.__setattr__(self, "revision_depths", depths)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "FixtureSpec":
        kwargs: dict[str, Any] = {}
        for key in (
            "seed",
            "file_count",
            "file_size_bytes",
            "cloud_native_count",
            "dialect",
            "max_depth",
            "branching",
        ):
            if key in data:
                kwargs[key] = data[key]
        if "revision_depths" in data:
            kwargs["revision_depths"] = tuple(
                (float(f), int(d)) for f, d in dict(data["revision_depths"]).items()
            )
        return cls(**kwargs)

    def to_json(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "file_count": self.file_count,
            "file_size_bytes": self.file_size_bytes,
            "revision_depths": {str(f): d for f, d in self.revision_depths},
            "cloud_native_count": self.cloud_native_count,
            "dialect": self.dialect,
            "max_depth": self.max_depth,
            "branching": self.branching,
        }


@dataclass(frozen=True)
class SimRevision:
    revision_id: str
    timestamp: datetime
    size: int
    key: int
    md5: str
    sha256: str


@dataclass(frozen=True)
class SimFile:
    file_id: str
    path: str
    name: str
    cloud_native: bool
    revisions: tuple[SimRevision, ...]
    rev_token: str
    exports: tuple[str, ...] = ()
    export_truth: Mapping[str, dict] = field(default_factory=dict)

    @property
    def newest(self) -> SimRevision:
        return self.revisions[-1]

    @property
    def size(self) -> int:
        return self.newest.size

    @property
    def modified(self) -> datetime:
        return self.newest.timestamp

    @property
    def created(self) -> datetime:
        return self.revisions[0].timestamp


def _hash_stream(key: int, size: int) -> tuple[str, str]:
    md5 = hashlib.md5()
    sha = hashlib.sha256()
    offset = 0
    while offset < size:
        chunk = pseudo_random_bytes(key, min(1 << 20, size - offset), offset)
        md5.update(chunk)
        sha.update(chunk)
        offset += len(chunk)
    return md5.hexdigest(), sha.hexdigest()


def _hash_bytes(data: bytes) -> tuple[str, str]:
    return hashlib.md5(data).hexdigest(), hashlib.sha256(data).hexdigest()


class Fixture:
    """One generated account: files sorted by id, plus ground truth."""

    def __init__(self, spec: FixtureSpec, files: list[SimFile], user: str):
        self.spec = spec
        self.files = sorted(files, key=lambda f: f.file_id)
        self.by_id = {f.file_id: f for f in self.files}
        self.user = user

    @classmethod
    def generate(cls, spec: FixtureSpec) -> "Fixture":
        rng = Splitmix64(stream_key(spec.seed, "fixture", "structure"))
        folders = _folder_paths(spec)
        user = f"user{spec.seed}@simdrive.example"

        regular_count = spec.file_count - spec.cloud_native_count
        depth_by_index = _assign_revision_depths(spec, regular_count)

        files: list[SimFile] = []
        seen_ids: set[str] = set()
        for index in range(spec.file_count):
            file_id = f"{rng.next64():016x}"
            while file_id in seen_ids:
                file_id = f"{rng.next64():016x}"
            seen_ids.add(file_id)

            cloud_native = index >= regular_count
            name = _pick_name(index, regular_count, cloud_native)
            folder = folders[rng.below(len(folders))]
            base_ts = _BASE_TIME + timedelta(
                minutes=rng.below(60 * 24 * 120),
                seconds=rng.below(60),
                milliseconds=rng.below(1000),
            )

            depth = 1 if cloud_native else depth_by_index[index]
            revisions = []
            for j in range(depth):
                rev_id = f"{rng.next64():012x}"
                ts = base_ts + timedelta(hours=j)
                size = 0 if cloud_native else spec.file_size_bytes * (j + 1) // depth
                key = stream_key(spec.seed, file_id, rev_id)
                md5, sha = _hash_stream(key, size)
                revisions.append(SimRevision(rev_id, ts, size, key, md5, sha))

            token_key = stream_key(spec.seed, file_id, revisions[-1].revision_id + ":rev")
            rev_token = f"{token_key:016x}"

            exports: tuple[str, ...] = ()
            export_truth: dict[str, dict] = {}
            if cloud_native:
                exports = EXPORT_FORMATS
                for fmt in exports:
                    data = render_export(spec.seed, file_id, name, fmt)
                    md5, sha = _hash_bytes(data)
                    export_truth[fmt] = {"size": len(data), "md5": md5, "sha256": sha}

            files.append(
                SimFile(
                    file_id=file_id,
                    path=f"{folder}/{name}",
                    name=name,
                    cloud_native=cloud_native,
                    revisions=tuple(revisions),
                    rev_token=rev_token,
                    exports=exports,
                    export_truth=export_truth,
                )
            )
        return cls(spec, files, user)

    # -- content ---------------------------------------------------------

    def revision(self, file_id: str, revision_id: str) -> SimRevision | None:
        sim_file = self.by_id.get(file_id)
        if sim_file is None:
            return None
        for rev in sim_file.revisions:
            if rev.revision_id == revision_id:
                return rev
        return None

    def content_chunk(self, rev: SimRevision, offset: int, length: int) -> bytes:
        return pseudo_random_bytes(rev.key, min(length, rev.size - offset), offset)

    def export_bytes(self, file_id: str, fmt: str) -> bytes:
        sim_file = self.by_id[file_id]
        return render_export(self.spec.seed, file_id, sim_file.name, fmt)

    # -- wire/truth rendering ---------------------------------------------

    def catalog_entry(self, sim_file: SimFile) -> dict:
        entry: dict[str, Any] = {
            "id": sim_file.file_id,
            "path": sim_file.path,
            "name": sim_file.name,
            "size": sim_file.size,
            "modified": format_timestamp_ms(sim_file.modified),
            "revisions": len(sim_file.revisions),
            "kind": "cloud-native" if sim_file.cloud_native else "file",
        }
        if sim_file.cloud_native:
            entry["exports"] = list(sim_file.exports)
        elif self.spec.dialect == DIALECT_HASHED:
            entry["md5"] = sim_file.newest.md5
        else:
            entry["rev"] = sim_file.rev_token
        return entry

    def detail_entry(self, sim_file: SimFile) -> dict:
        entry = self.catalog_entry(sim_file)
        entry["created"] = format_timestamp_ms(sim_file.created)
        entry["owner"] = self.user
        return entry

    def revisions_entry(self, sim_file: SimFile) -> dict:
        revisions = []
        for rev in sim_file.revisions:
            item: dict[str, Any] = {
                "id": rev.revision_id,
                "timestamp": format_timestamp_ms(rev.timestamp),
                "size": rev.size,
            }
            if self.spec.dialect == DIALECT_HASHED and not sim_file.cloud_native:
                item["md5"] = rev.md5
            revisions.append(item)
        return {"revisions": revisions}

    def truth_entry(self, sim_file: SimFile) -> dict:
        entry = {
            "file_id": sim_file.file_id,
            "path": sim_file.path,
            "cloud_native": sim_file.cloud_native,
            "rev_token": sim_file.rev_token,
            "revisions": [
                {
                    "revision_id": rev.revision_id,
                    "timestamp": format_timestamp_ms(rev.timestamp),
                    "size": rev.size,
                    "md5": rev.md5,
                    "sha256": rev.sha256,
                }
                for rev in sim_file.revisions
            ],
        }
        if sim_file.cloud_native:
            entry["exports"] = {fmt: dict(truth) for fmt, truth in sim_file.export_truth.items()}
        return entry

    def summary(self) -> dict:
        total = sum(rev.size for f in self.files for rev in f.revisions)
        total += sum(t["size"] for f in self.files for t in f.export_truth.values())
        return {
            "user": self.user,
            "file_count": len(self.files),
            "total_bytes": total,
            "dialect": self.spec.dialect,
            "files": [self.truth_entry(f) for f in self.files],
        }


def render_export(seed: int, file_id: str, name: str, fmt: str) -> bytes:
    body = snapshot_body(seed, file_id)
    if fmt == "pdf":
        return pdf_snapshot(name, body)
    if fmt == "txt":
        return text_snapshot(name, body)
    raise KeyError(fmt)


def _folder_paths(spec: FixtureSpec) -> list[str]:
    """Deterministic folder tree rooted at "My Drive"."""
    paths = ["My Drive"]
    frontier = ["My Drive"]
    cursor = 0
    for _ in range(max(0, spec.max_depth - 1)):
        next_frontier = []
        for parent in frontier:
            for _ in range(max(0, spec.branching)):
                base = _FOLDER_NAMES[cursor % len(_FOLDER_NAMES)]
                series = cursor // len(_FOLDER_NAMES)
                name = base if series == 0 else f"{base} {series + 1}"
                cursor += 1
                child = f"{parent}/{name}"
                paths.append(child)
                next_frontier.append(child)
        frontier = next_frontier
    return paths


def _pick_name(index: int, regular_count: int, cloud_native: bool) -> str:
    if cloud_native:
        pool = _CLOUD_NATIVE_NAMES
        nth = index - regular_count
    else:
        pool = _REGULAR_NAMES
        nth = index
    base = pool[nth % len(pool)]
    series = nth // len(pool)
    if series == 0:
        return base
    stem, dot, ext = base.rpartition(".")
    if dot and stem:
        return f"{stem} ({series}).{ext}"
    return f"{base} ({series})"


def _assign_revision_depths(spec: FixtureSpec, regular_count: int) -> dict[int, int]:
    """Map regular-file indexes to revision counts per the fraction table.

    Quotas are fractions of the whole account; revision histories only
    attach to regular files, assigned in generation order.
    """
    depths = {i: 1 for i in range(regular_count)}
    cursor = 0
    for fraction, depth in spec.revision_depths:
        quota = int(round(fraction * spec.file_count))
        while quota > 0 and cursor < regular_count:
            depths[cursor] = depth
            cursor += 1
            quota -= 1
    return depths
