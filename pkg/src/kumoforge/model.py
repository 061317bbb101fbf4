"""Normalized domain model for cloud-drive evidence.

Types here are immutable values and every operation is a pure function,
so they are safe to share across concurrent workers.  All timestamps are
UTC with millisecond precision; nothing in this module ever renders
local time.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable


class FileCategory(enum.Enum):
    DOC = "doc"
    XLS = "xls"
    PPT = "ppt"
    TEXT = "text"
    PDF = "pdf"
    IMAGE = "image"
    AUDIO = "audio"
    VIDEO = "video"
    OTHER = "other"


# Extension table: the single auditable source for category mapping.
# Each extension belongs to exactly one category (see tests).
CATEGORY_EXTENSIONS: dict[FileCategory, frozenset[str]] = {
    FileCategory.DOC: frozenset({".doc", ".docx", ".odf", ".odt"}),
    FileCategory.XLS: frozenset({".xls", ".xlsx", ".ods"}),
    FileCategory.PPT: frozenset({".ppt", ".pptx", ".odp"}),
    FileCategory.TEXT: frozenset(
        {".txt", ".md", ".c", ".h", ".cpp", ".java", ".py", ".js", ".sh", ".csv"}
    ),
    FileCategory.PDF: frozenset({".pdf"}),
    FileCategory.IMAGE: frozenset(
        {".jpg", ".jpeg", ".png", ".gif", ".bmp", ".tif", ".tiff"}
    ),
    FileCategory.AUDIO: frozenset({".mp3", ".wav", ".flac", ".ogg", ".m4a"}),
    FileCategory.VIDEO: frozenset({".mp4", ".avi", ".mkv", ".mov", ".wmv"}),
}

_EXTENSION_TO_CATEGORY: dict[str, FileCategory] = {
    ext: cat for cat, exts in CATEGORY_EXTENSIONS.items() for ext in exts
}

# Link-file pseudo-extensions used by cloud-native document kinds.
CLOUD_NATIVE_EXTENSIONS: dict[str, FileCategory] = {
    ".gdoc": FileCategory.DOC,
    ".gsheet": FileCategory.XLS,
    ".gslides": FileCategory.PPT,
}

OFFICEDOC_CATEGORIES = frozenset(
    {FileCategory.DOC, FileCategory.XLS, FileCategory.PPT}
)


class HashAlgorithm(enum.Enum):
    MD5 = "MD5"
    SHA256 = "SHA256"
    # Opaque provider change token ("rev"); usable for change detection
    # only, never for integrity verification.
    OPAQUE_REV = "OPAQUE_REV"


class HashProvenance(enum.Enum):
    PROVIDER_CLAIMED = "PROVIDER_CLAIMED"
    LOCALLY_COMPUTED = "LOCALLY_COMPUTED"


_HEX_RE = re.compile(r"^[0-9a-f]+$")


@dataclass(frozen=True)
class HashClaim:
    algorithm: HashAlgorithm
    value: str
    provenance: HashProvenance

    def __post_init__(self):
        if self.algorithm is HashAlgorithm.MD5:
            if len(self.value) != 32 or not _HEX_RE.match(self.value):
                raise ValueError(f"MD5 value must be 32 lowercase hex chars: {self.value!r}")
        elif self.algorithm is HashAlgorithm.SHA256:
            if len(self.value) != 64 or not _HEX_RE.match(self.value):
                raise ValueError(f"SHA256 value must be 64 lowercase hex chars: {self.value!r}")
        elif not self.value:
            raise ValueError("opaque rev token must be non-empty")

    @property
    def verifiable(self) -> bool:
        return self.algorithm is not HashAlgorithm.OPAQUE_REV


@dataclass(frozen=True)
class Revision:
    revision_id: str
    timestamp: datetime
    size_bytes: int
    hash: HashClaim | None = None

    def __post_init__(self):
        if self.size_bytes < 0:
            raise ValueError("revision size must be non-negative")
        _require_utc(self.timestamp)

    def sort_key(self) -> tuple[datetime, str]:
        return (self.timestamp, self.revision_id)


@dataclass(frozen=True)
class CloudFile:
    file_id: str
    remote_path: str
    name: str
    size_bytes: int
    modified_time: datetime
    revision_count: int = 1
    provider_hash: HashClaim | None = None
    cloud_native: bool = False
    export_formats: tuple[str, ...] = ()
    category: FileCategory | None = None

    def __post_init__(self):
        if not self.file_id:
            raise ValueError("file_id must be non-empty")
        segments = [s for s in self.remote_path.split("/") if s]
        if not segments or segments[-1] != self.name:
            raise ValueError(
                f"name {self.name!r} is not the final segment of {self.remote_path!r}"
            )
        if self.size_bytes < 0:
            raise ValueError("size must be non-negative")
        if self.revision_count < 1:
            raise ValueError("revision_count must be >= 1")
        if self.cloud_native:
            if self.provider_hash is not None:
                raise ValueError("cloud-native files carry no content hash claim")
            if not self.export_formats:
                raise ValueError("cloud-native files must offer export formats")
        _require_utc(self.modified_time)
        if self.category is None:
            object.__setattr__(
                self, "category", categorize_file(self.name, self.cloud_native)
            )


class FilterKind(enum.Enum):
    ALL = "all"
    CATEGORY = "category"
    GROUP_OFFICEDOCS = "officedocs"
    MANIFEST = "manifest"


# CLI-facing filter vocabulary.
FILTER_NAMES = (
    "all",
    "doc",
    "xls",
    "ppt",
    "text",
    "pdf",
    "officedocs",
    "image",
    "audio",
    "video",
)


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    category: FileCategory | None = None
    file_ids: frozenset[str] = frozenset()

    @classmethod
    def all(cls) -> "FilterSpec":
        return cls(FilterKind.ALL)

    @classmethod
    def for_category(cls, category: FileCategory) -> "FilterSpec":
        return cls(FilterKind.CATEGORY, category=category)

    @classmethod
    def officedocs(cls) -> "FilterSpec":
        return cls(FilterKind.GROUP_OFFICEDOCS)

    @classmethod
    def manifest(cls, file_ids: Iterable[str]) -> "FilterSpec":
        return cls(FilterKind.MANIFEST, file_ids=frozenset(file_ids))

    @classmethod
    def from_name(cls, name: str) -> "FilterSpec":
        """Resolve a CLI filter name ('all', 'pdf', 'officedocs', ...)."""
        if name == "all":
            return cls.all()
        if name == "officedocs":
            return cls.officedocs()
        if name in FILTER_NAMES:
            return cls.for_category(FileCategory(name))
        raise ValueError(f"unknown filter: {name!r}")


@dataclass(frozen=True)
class AcquisitionRecord:
    """One 8-field chain-of-custody entry for an acquired item."""

    time_utc: datetime
    application: str
    user: str
    file_id: str
    remote_path: str
    revision_label: str
    local_path: str
    hash: str  # provider MD5 hex, or "-" when no verifiable hash exists

    FIELD_NAMES = (
        "TIME(UTC)",
        "APPLICATION",
        "USER",
        "FILE-ID",
        "REMOTE PATH",
        "REVISION",
        "LOCAL PATH",
        "HASH(MD5)",
    )

    def fields(self) -> tuple[str, ...]:
        return (
            format_log_time(self.time_utc),
            self.application,
            self.user,
            self.file_id,
            self.remote_path,
            self.revision_label,
            self.local_path,
            self.hash,
        )


LOG_HEADER = " ".join(AcquisitionRecord.FIELD_NAMES)


def _require_utc(ts: datetime) -> None:
    if ts.tzinfo is None or ts.utcoffset() != timezone.utc.utcoffset(None):
        raise ValueError(f"timestamp must be timezone-aware UTC: {ts!r}")


def format_timestamp_ms(ts: datetime) -> str:
    """Render a UTC timestamp as ISO-8601 with milliseconds and a 'Z'."""
    _require_utc(ts)
    return f"{ts:%Y-%m-%dT%H:%M:%S}.{ts.microsecond // 1000:03d}Z"


_TS_MS_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})\.(\d{3})Z$")


def parse_timestamp_ms(text: str) -> datetime:
    m = _TS_MS_RE.match(text)
    if not m:
        raise ValueError(f"not a millisecond UTC timestamp: {text!r}")
    y, mo, d, h, mi, s, ms = (int(g) for g in m.groups())
    return datetime(y, mo, d, h, mi, s, ms * 1000, tzinfo=timezone.utc)


def format_log_time(ts: datetime) -> str:
    """TIME(UTC) column rendering, microsecond precision."""
    _require_utc(ts)
    return f"{ts:%Y-%m-%d %H:%M:%S.%f}"


def categorize_file(name: str, cloud_native: bool = False) -> FileCategory:
    """Classify a file by its name extension.

    Case-insensitive and total: unrecognized extensions map to OTHER.
    Cloud-native kinds are resolved through their link-file
    pseudo-extension (.gdoc/.gsheet/.gslides); a cloud-native item with
    no recognizable kind is treated as a document.
    """
    if not name:
        raise ValueError("name must be non-empty")
    ext = Path(name).suffix.lower()
    if cloud_native:
        if ext in CLOUD_NATIVE_EXTENSIONS:
            return CLOUD_NATIVE_EXTENSIONS[ext]
        return FileCategory.DOC
    return _EXTENSION_TO_CATEGORY.get(ext, FileCategory.OTHER)


def matches(filt: FilterSpec, file: CloudFile) -> bool:
    """Selection predicate used by listing and acquisition."""
    if filt.kind is FilterKind.ALL:
        return True
    if filt.kind is FilterKind.CATEGORY:
        return file.category is filt.category
    if filt.kind is FilterKind.GROUP_OFFICEDOCS:
        return file.category in OFFICEDOC_CATEGORIES
    return file.file_id in filt.file_ids


# Characters replaced inside path segments: path separators plus the
# set commonly rejected by desktop filesystems.
_ILLEGAL_SEGMENT_CHARS = set('/\\<>:"|?*')


def _sanitize_segment(segment: str) -> str:
    cleaned = "".join(
        "_" if c in _ILLEGAL_SEGMENT_CHARS or ord(c) < 0x20 else c for c in segment
    )
    # Dot-only segments would change directory meaning.
    if cleaned in ("", ".", ".."):
        return "_"
    return cleaned


def sanitize_local_path(remote_path: str, file_id: str, root: Path) -> Path:
    """Map a remote path to a local path strictly inside ``root``.

    Pure segment-wise mapping; collision disambiguation between files is
    the :class:`PathAllocator`'s job because it needs per-job state.
    """
    if not remote_path:
        raise ValueError("remote_path must be non-empty")
    segments = [_sanitize_segment(s) for s in remote_path.split("/") if s != ""]
    if not segments:
        segments = [_sanitize_segment(file_id)]
    return Path(root).joinpath(*segments)


class PathAllocator:
    """Assigns collision-free local paths for one acquisition job.

    Distinct remote files whose sanitized paths coincide are
    disambiguated by appending "." + file_id to the later one, keeping
    the remote->local mapping injective for the job.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self._files: set[Path] = set()
        self._dirs: set[Path] = set()

    def allocate(self, remote_path: str, file_id: str) -> Path:
        path = sanitize_local_path(remote_path, file_id, self.root)
        if self._conflicts(path):
            path = path.with_name(f"{path.name}.{file_id}")
        if self._conflicts(path):
            # A parent directory is shadowed by an already-allocated
            # file; flatten to a unique name directly under root.
            flat = "_".join(p for p in sanitize_local_path(
                remote_path, file_id, Path(".")).parts if p != ".")
            path = self.root / f"{flat}.{file_id}"
        self._register(path)
        return path

    def _conflicts(self, path: Path) -> bool:
        if path in self._files or path in self._dirs:
            return True
        return any(parent in self._files for parent in _parents_below(path, self.root))

    def _register(self, path: Path) -> None:
        self._files.add(path)
        self._dirs.update(_parents_below(path, self.root))


def _parents_below(path: Path, root: Path) -> list[Path]:
    out = []
    for parent in path.parents:
        if parent == root:
            break
        out.append(parent)
    return out


def revision_filename(base_name: str, rev: Revision, *, tag_revision_id: bool = False) -> str:
    """Name one revision artifact: "(<timestamp>) <base_name>".

    Applied uniformly to every revision, newest included.  When two
    revisions of one file share a rendered timestamp, callers set
    ``tag_revision_id`` to append "#<revision_id>" inside the prefix,
    preserving injectivity.
    """
    stamp = format_timestamp_ms(rev.timestamp)
    if tag_revision_id:
        stamp = f"{stamp}#{rev.revision_id}"
    return f"({stamp}) {base_name}"


_REVISION_NAME_RE = re.compile(
    r"^\((\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z)(?:#[^)]*)?\) (.+)$", re.DOTALL
)


def parse_revision_filename(filename: str) -> tuple[datetime, str]:
    """Recover (timestamp, base_name) from a revision artifact name."""
    m = _REVISION_NAME_RE.match(filename)
    if not m:
        raise ValueError(f"not a revision artifact name: {filename!r}")
    return parse_timestamp_ms(m.group(1)), m.group(2)
