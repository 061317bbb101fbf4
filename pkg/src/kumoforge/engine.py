"""Acquisition pipeline: discovery, selection, verified acquisition.

Runs the three phases over any driver: page the full catalog into a
manifest (plus CSV), filter it down to targets, then pull every target
into the evidence tree with revision capture, cloud-native export,
hash verification, raw-metadata preservation and chain-of-custody
logging.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, IO, Iterable

from kumoforge import APPLICATION_TAG
from kumoforge.errors import (
    DiscoveryIncomplete,
    IntegrityMismatch,
    KumoforgeError,
    TransientIO,
    UnknownManifestIds,
)
from kumoforge.model import (
    AcquisitionRecord,
    CloudFile,
    FilterKind,
    FilterSpec,
    HashAlgorithm,
    HashClaim,
    HashProvenance,
    LOG_HEADER,
    PathAllocator,
    Revision,
    format_log_time,
    format_timestamp_ms,
    matches,
    revision_filename,
)
from kumoforge.providers.base import CloudDriver, DriverCapabilities, ProviderSession

log = logging.getLogger("kumoforge.engine")

SNAPSHOT_FORMAT = "pdf"

CSV_HEADER = ("file_id", "remote_path", "revisions", "hash")


def hash_display(file: CloudFile) -> str:
    """Listing/log hash column: provider MD5 hex, '-' otherwise."""
    claim = file.provider_hash
    if claim is not None and claim.algorithm is HashAlgorithm.MD5:
        return claim.value
    return "-"


@dataclass(frozen=True)
class ManifestRow:
    file_id: str
    remote_path: str
    revision_count: int
    hash_display: str


@dataclass
class FileManifest:
    """Catalog projection in stable file-id order, with the files behind it."""

    rows: list[ManifestRow]
    files: list[CloudFile]

    @classmethod
    def from_files(cls, files: list[CloudFile]) -> "FileManifest":
        ordered = sorted(files, key=lambda f: f.file_id)
        rows = [
            ManifestRow(f.file_id, f.remote_path, f.revision_count, hash_display(f))
            for f in ordered
        ]
        return cls(rows=rows, files=ordered)


@dataclass
class DiscoveryResult:
    manifest: FileManifest
    csv_path: Path


@dataclass
class ItemFailure:
    file_id: str
    remote_path: str
    error_code: str
    message: str


@dataclass
class AcquisitionCounters:
    downloaded: int = 0
    updated: int = 0
    failed: int = 0


class JobProgress:
    """Thread-safe progress counters polled by the control API."""

    def __init__(self):
        self._lock = threading.Lock()
        self.items_total = 0
        self.items_done = 0
        self.bytes_done = 0

    def start(self, items_total: int) -> None:
        with self._lock:
            self.items_total = items_total

    def add_bytes(self, n: int) -> None:
        with self._lock:
            self.bytes_done += n

    def item_done(self) -> None:
        with self._lock:
            self.items_done += 1

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "items_total": self.items_total,
                "items_done": self.items_done,
                "bytes_done": self.bytes_done,
            }


@dataclass
class AcquisitionJob:
    session: ProviderSession
    filter: FilterSpec
    destination_root: Path
    started_at: datetime
    records: list[AcquisitionRecord] = field(default_factory=list)
    counters: AcquisitionCounters = field(default_factory=AcquisitionCounters)
    failures: list[ItemFailure] = field(default_factory=list)
    bytes_done: int = 0
    duration: timedelta | None = None
    summary: str | None = None


def select(manifest: FileManifest, filt: FilterSpec) -> list[CloudFile]:
    """Filter manifest files, preserving manifest order.

    Manifest-driven selection errors on ids absent from the account,
    listing every miss.
    """
    if filt.kind is FilterKind.MANIFEST:
        known = {f.file_id for f in manifest.files}
        missing = sorted(filt.file_ids - known)
        if missing:
            raise UnknownManifestIds(missing)
    return [f for f in manifest.files if matches(filt, f)]


def verify_item(
    file: CloudFile, local_bytes: bytes, capabilities: DriverCapabilities
) -> HashClaim:
    """Final integrity claim for an acquired item.

    A provider MD5 claim must match the locally computed digest;
    otherwise a locally computed SHA-256 is recorded.
    """
    md5_hex = hashlib.md5(local_bytes).hexdigest()
    sha_hex = hashlib.sha256(local_bytes).hexdigest()
    return _finalize_claim(file.provider_hash, md5_hex, sha_hex, file.file_id)


def _finalize_claim(
    provider_claim: HashClaim | None, md5_hex: str, sha_hex: str, file_id: str
) -> HashClaim:
    if provider_claim is not None and provider_claim.algorithm is HashAlgorithm.MD5:
        if md5_hex != provider_claim.value:
            raise IntegrityMismatch(
                f"{file_id}: computed MD5 {md5_hex} != provider claim {provider_claim.value}"
            )
        return provider_claim
    return HashClaim(HashAlgorithm.SHA256, sha_hex, HashProvenance.LOCALLY_COMPUTED)


def write_log_line(record: AcquisitionRecord, log_sink: IO[str]) -> str:
    """Emit the 8 record fields, space-separated, in header order."""
    line = " ".join(record.fields())
    log_sink.write(line + "\n")
    return line


def summary_line(counters: AcquisitionCounters, user: str) -> str:
    text = f"{counters.downloaded} files downloaded and {counters.updated} updated"
    if counters.failed:
        text += f" and {counters.failed} failed"
    return text + f" from {user} drive"


def read_manifest_ids(csv_path: Path) -> list[str]:
    """File ids from a manifest CSV; a leading header row is optional."""
    ids: list[str] = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            if row[0].strip() == "file_id":
                continue
            ids.append(row[0].strip())
    return ids


class _HashingSink:
    """Streams chunks to disk while hashing and counting."""

    def __init__(self, out: IO[bytes], progress: JobProgress | None):
        self._out = out
        self._progress = progress
        self.md5 = hashlib.md5()
        self.sha256 = hashlib.sha256()
        self.size = 0

    def __call__(self, chunk: bytes) -> None:
        self._out.write(chunk)
        self.md5.update(chunk)
        self.sha256.update(chunk)
        self.size += len(chunk)
        if self._progress is not None:
            self._progress.add_bytes(len(chunk))


def _digest_file(path: Path, algorithm: str) -> str:
    h = hashlib.new(algorithm)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _LogWriter:
    """Appends custody lines to the evidence log, mirroring to a callback."""

    def __init__(self, path: Path, on_line: Callable[[str], None] | None):
        self.path = path
        self.on_line = on_line
        self._fh: IO[str] | None = None

    def __enter__(self) -> "_LogWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", encoding="utf-8")
        if fresh:
            self._fh.write(LOG_HEADER + "\n")
        return self

    def append(self, record: AcquisitionRecord) -> str:
        line = write_log_line(record, self._fh)
        self._fh.flush()
        if self.on_line is not None:
            self.on_line(line)
        return line

    def __exit__(self, *exc):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class _ItemResult:
    skipped: bool
    was_update: bool = False


class AcquisitionEngine:
    """Drives one authenticated account through the three phases."""

    def __init__(
        self,
        driver: CloudDriver,
        session: ProviderSession,
        *,
        localdata_dir: Path | str = "localdata",
        downloads_dir: Path | str = "downloaded",
        application: str = APPLICATION_TAG,
        page_size: int = 100,
        retry_attempts: int = 3,
        retry_base_delay: float = 0.5,
        workers: int = 1,
        on_line: Callable[[str], None] | None = None,
        progress: JobProgress | None = None,
    ):
        self.driver = driver
        self.session = session
        self.localdata_dir = Path(localdata_dir)
        self.downloads_dir = Path(downloads_dir)
        self.application = application
        self.page_size = page_size
        self.retry_attempts = retry_attempts
        self.retry_base_delay = retry_base_delay
        self.workers = max(1, workers)
        self.on_line = on_line
        self.progress = progress
        self._job_lock = threading.Lock()

    # -- phase 1: content discovery -----------------------------------------

    def discover(self) -> DiscoveryResult:
        """Page the full catalog and persist the discovery CSV.

        All-or-nothing: a page failure that survives retries discards
        everything gathered so far.
        """
        files: list[CloudFile] = []
        token: str | None = None
        while True:
            try:
                page, next_token = self._with_retry(
                    lambda t=token: self.driver.list_files(self.session, t, self.page_size)
                )
            except TransientIO as exc:
                raise DiscoveryIncomplete(f"catalog paging failed: {exc}")
            if next_token is not None and len(page) != self.page_size:
                raise DiscoveryIncomplete(
                    f"short page: got {len(page)} entries with a continuation token"
                )
            files.extend(page)
            if next_token is None:
                break
            token = next_token

        seen: set[str] = set()
        for f in files:
            if f.file_id in seen:
                raise DiscoveryIncomplete(f"duplicate file id in catalog: {f.file_id}")
            seen.add(f.file_id)

        manifest = FileManifest.from_files(files)
        csv_path = self._write_csv(manifest)
        return DiscoveryResult(manifest=manifest, csv_path=csv_path)

    def _write_csv(self, manifest: FileManifest) -> Path:
        self.localdata_dir.mkdir(parents=True, exist_ok=True)
        name = f"{self.session.user}-{self.driver.descriptor.service_id}.csv"
        path = self.localdata_dir / name
        tmp = path.with_suffix(".csv.tmp")
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in manifest.rows:
                writer.writerow(
                    [row.file_id, row.remote_path, row.revision_count, row.hash_display]
                )
        tmp.replace(path)
        return path

    # -- phase 3: target acquisition -----------------------------------------

    def acquire(
        self,
        targets: list[CloudFile],
        *,
        filter_used: FilterSpec | None = None,
        dest_override: Path | str | None = None,
    ) -> AcquisitionJob:
        user = self.session.user
        root = Path(dest_override) if dest_override else self.downloads_dir / user
        job = AcquisitionJob(
            session=self.session,
            filter=filter_used or FilterSpec.all(),
            destination_root=root,
            started_at=datetime.now(timezone.utc),
        )
        started = time.monotonic()
        root.mkdir(parents=True, exist_ok=True)
        if self.progress is not None:
            self.progress.start(len(targets))

        # Local paths are assigned up front in manifest order, keeping
        # the remote->local mapping deterministic at any worker count.
        allocator = PathAllocator(root)
        plain_paths = [allocator.allocate(f.remote_path, f.file_id) for f in targets]

        log_path = root / f"{self.driver.descriptor.service_id}.log"
        with _LogWriter(log_path, self.on_line) as logw:

            def process(file: CloudFile, plain_path: Path) -> None:
                try:
                    self._acquire_one(job, file, plain_path, logw)
                except KumoforgeError as exc:
                    log.warning("item failed: %s (%s)", file.remote_path, exc.code)
                    with self._job_lock:
                        job.failures.append(
                            ItemFailure(file.file_id, file.remote_path, exc.code, str(exc))
                        )
                        job.counters.failed += 1
                finally:
                    if self.progress is not None:
                        self.progress.item_done()

            if self.workers == 1:
                for file, plain_path in zip(targets, plain_paths):
                    process(file, plain_path)
            else:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    list(pool.map(process, targets, plain_paths))

        job.duration = timedelta(seconds=time.monotonic() - started)
        job.summary = summary_line(job.counters, user)
        return job

    # -- per-item work -------------------------------------------------------

    def _acquire_one(
        self,
        job: AcquisitionJob,
        file: CloudFile,
        plain_path: Path,
        logw: _LogWriter,
    ) -> None:
        root = job.destination_root
        sidecar_path = root / "metadata" / f"{file.file_id}.acquisition.json"
        prior = self._read_sidecar(sidecar_path)

        if file.cloud_native:
            result = self._acquire_snapshot(job, file, plain_path, sidecar_path, prior, logw)
        else:
            result = self._acquire_revisions(job, file, plain_path, sidecar_path, prior, logw)

        if result.skipped:
            return
        with self._job_lock:
            if result.was_update:
                job.counters.updated += 1
            else:
                job.counters.downloaded += 1

    def _acquire_snapshot(
        self, job, file: CloudFile, plain_path: Path, sidecar_path: Path, prior, logw
    ) -> _ItemResult:
        root = job.destination_root
        target = plain_path.with_name(f"{plain_path.name}.{SNAPSHOT_FORMAT}")
        change_token = f"modified:{format_timestamp_ms(file.modified_time)}"

        if (
            prior is not None
            and prior.get("change_token") == change_token
            and target.exists()
            and _digest_file(target, "sha256") == _prior_newest_sha(prior)
        ):
            return _ItemResult(skipped=True)

        written: list[Path] = []
        try:
            raw_path = self._persist_raw_metadata(root, file)
            written.append(raw_path)
            sink_result, final = self._download_to(
                target,
                lambda sink: self.driver.export_snapshot(
                    self.session, file.file_id, SNAPSHOT_FORMAT, sink
                ),
            )
            written.append(final)
        except KumoforgeError:
            self._cleanup(written)
            raise

        claim = HashClaim(
            HashAlgorithm.SHA256,
            sink_result.sha256.hexdigest(),
            HashProvenance.LOCALLY_COMPUTED,
        )
        artifacts = [
            {
                "kind": "snapshot",
                "format": SNAPSHOT_FORMAT,
                "path": str(final.relative_to(root)),
                "size": sink_result.size,
                "md5": sink_result.md5.hexdigest(),
                "sha256": sink_result.sha256.hexdigest(),
                "provenance": claim.provenance.value,
                "verified": False,
            }
        ]
        self._finish_item(
            job, file, target, change_token, artifacts, claim, sidecar_path, logw
        )
        return _ItemResult(skipped=False, was_update=prior is not None)

    def _acquire_revisions(
        self, job, file: CloudFile, plain_path: Path, sidecar_path: Path, prior, logw
    ) -> _ItemResult:
        root = job.destination_root
        revisions = self._with_retry(
            lambda: self.driver.list_revisions(self.session, file.file_id)
        )
        # Base revision names on the sanitized, collision-free local name
        # so two remote files mapping into one directory stay distinct.
        names = _revision_names(plain_path.name, revisions)
        newest = revisions[-1] if revisions else None
        newest_path = plain_path.parent / names[-1] if revisions else plain_path

        if newest is not None and self._can_skip(file, prior, newest_path):
            return _ItemResult(skipped=True)

        claim_source = file.provider_hash
        change_token = (
            f"rev:{claim_source.value}"
            if claim_source is not None and claim_source.algorithm is HashAlgorithm.OPAQUE_REV
            else f"modified:{format_timestamp_ms(file.modified_time)}"
        )

        written: list[Path] = []
        artifacts: list[dict] = []
        newest_md5 = newest_sha = ""
        try:
            raw_path = self._persist_raw_metadata(root, file)
            written.append(raw_path)
            for rev, name in zip(revisions, names):
                target = plain_path.parent / name
                sink_result, final = self._download_to(
                    target,
                    lambda sink, r=rev: self.driver.download_revision(
                        self.session, file.file_id, r.revision_id, sink
                    ),
                    expected_size=rev.size_bytes,
                    quarantine=self._quarantine_path(root, file, name),
                    revision_claim=rev.hash,
                    file_id=file.file_id,
                )
                written.append(final)
                md5_hex = sink_result.md5.hexdigest()
                sha_hex = sink_result.sha256.hexdigest()
                artifacts.append(
                    {
                        "kind": "revision",
                        "revision_id": rev.revision_id,
                        "timestamp": format_timestamp_ms(rev.timestamp),
                        "path": str(final.relative_to(root)),
                        "size": sink_result.size,
                        "md5": md5_hex,
                        "sha256": sha_hex,
                        "provider_md5": rev.hash.value
                        if rev.hash is not None and rev.hash.algorithm is HashAlgorithm.MD5
                        else None,
                        "provenance": HashProvenance.PROVIDER_CLAIMED.value
                        if rev.hash is not None and rev.hash.algorithm is HashAlgorithm.MD5
                        else HashProvenance.LOCALLY_COMPUTED.value,
                        "verified": rev.hash is not None
                        and rev.hash.algorithm is HashAlgorithm.MD5,
                    }
                )
                newest_md5, newest_sha = md5_hex, sha_hex
            final_claim = _finalize_claim(
                file.provider_hash, newest_md5, newest_sha, file.file_id
            )
        except KumoforgeError:
            self._cleanup(written)
            raise

        self._finish_item(
            job, file, plain_path, change_token, artifacts, final_claim, sidecar_path, logw
        )
        return _ItemResult(skipped=False, was_update=prior is not None)

    def _can_skip(self, file: CloudFile, prior, newest_path: Path) -> bool:
        """Newest-revision artifact already present with a matching
        verified hash: neither downloaded nor re-fetched."""
        claim = file.provider_hash
        if claim is not None and claim.algorithm is HashAlgorithm.MD5:
            return newest_path.exists() and _digest_file(newest_path, "md5") == claim.value
        if prior is None or not newest_path.exists():
            return False
        current_token = (
            f"rev:{claim.value}"
            if claim is not None and claim.algorithm is HashAlgorithm.OPAQUE_REV
            else f"modified:{format_timestamp_ms(file.modified_time)}"
        )
        if prior.get("change_token") != current_token:
            return False
        return _digest_file(newest_path, "sha256") == _prior_newest_sha(prior)

    def _finish_item(
        self, job, file, record_path: Path, change_token, artifacts, claim, sidecar_path, logw
    ) -> None:
        record = AcquisitionRecord(
            time_utc=datetime.now(timezone.utc),
            application=self.application,
            user=self.session.user,
            file_id=file.file_id,
            remote_path=file.remote_path,
            revision_label=f"v.{file.revision_count}",
            local_path=str(record_path),
            hash=claim.value if claim.algorithm is HashAlgorithm.MD5 else "-",
        )
        sidecar = {
            "file_id": file.file_id,
            "remote_path": file.remote_path,
            "name": file.name,
            "service": self.driver.descriptor.service_id,
            "user": self.session.user,
            "application": self.application,
            "acquired_at": format_timestamp_ms(record.time_utc),
            "change_token": change_token,
            "final_hash": {
                "algorithm": claim.algorithm.value,
                "value": claim.value,
                "provenance": claim.provenance.value,
            },
            "record": {
                "time_utc": format_log_time(record.time_utc),
                "application": record.application,
                "user": record.user,
                "file_id": record.file_id,
                "remote_path": record.remote_path,
                "revision": record.revision_label,
                "local_path": record.local_path,
                "hash": record.hash,
            },
            "artifacts": artifacts,
        }
        sidecar_path.parent.mkdir(parents=True, exist_ok=True)
        sidecar_path.write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with self._job_lock:
            logw.append(record)
            job.records.append(record)
            job.bytes_done += sum(a["size"] for a in artifacts)

    # -- transfer helpers ------------------------------------------------------

    def _download_to(
        self,
        target: Path,
        transfer: Callable[[Callable[[bytes], None]], int],
        *,
        expected_size: int | None = None,
        quarantine: Path | None = None,
        revision_claim: HashClaim | None = None,
        file_id: str = "",
    ) -> tuple[_HashingSink, Path]:
        """Stream one artifact to a temp file, verify, move into place."""
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.parent / f".{target.name}.part"

        def attempt() -> _HashingSink:
            with open(tmp, "wb") as out:
                sink = _HashingSink(out, self.progress)
                transfer(sink)
                return sink

        try:
            sink = self._with_retry(attempt)
        except KumoforgeError:
            tmp.unlink(missing_ok=True)
            raise

        if expected_size is not None and sink.size != expected_size:
            tmp.unlink(missing_ok=True)
            raise TransientIO(
                f"{target.name}: size mismatch ({sink.size} != {expected_size})"
            )

        if (
            revision_claim is not None
            and revision_claim.algorithm is HashAlgorithm.MD5
            and sink.md5.hexdigest() != revision_claim.value
        ):
            if quarantine is not None:
                quarantine.parent.mkdir(parents=True, exist_ok=True)
                tmp.replace(quarantine)
            else:
                tmp.unlink(missing_ok=True)
            raise IntegrityMismatch(
                f"{file_id}: computed MD5 {sink.md5.hexdigest()} != "
                f"provider claim {revision_claim.value}"
            )

        tmp.replace(target)
        return sink, target

    def _persist_raw_metadata(self, root: Path, file: CloudFile) -> Path:
        raw = self._with_retry(
            lambda: self.driver.get_file_metadata(self.session, file.file_id)
        )
        path = root / "metadata" / f"{file.file_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(raw)
        return path

    def _quarantine_path(self, root: Path, file: CloudFile, artifact_name: str) -> Path:
        return root / "quarantine" / file.file_id / artifact_name

    @staticmethod
    def _read_sidecar(path: Path) -> dict | None:
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None

    @staticmethod
    def _cleanup(paths: Iterable[Path]) -> None:
        for path in paths:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass

    def _with_retry(self, fn):
        attempt = 0
        while True:
            try:
                return fn()
            except TransientIO:
                if attempt >= self.retry_attempts:
                    raise
                delay = self.retry_base_delay * (2**attempt)
                log.debug("transient failure, retry %d in %.2fs", attempt + 1, delay)
                time.sleep(delay)
                attempt += 1


def _revision_names(base_name: str, revisions: list[Revision]) -> list[str]:
    """Timestamp-prefixed artifact names, id-tagged on timestamp ties."""
    stamps = [format_timestamp_ms(r.timestamp) for r in revisions]
    duplicated = {s for s in stamps if stamps.count(s) > 1}
    return [
        revision_filename(base_name, rev, tag_revision_id=stamp in duplicated)
        for rev, stamp in zip(revisions, stamps)
    ]


def _prior_newest_sha(prior: dict) -> str:
    artifacts = prior.get("artifacts") or []
    if not artifacts:
        return ""
    return artifacts[-1].get("sha256", "")
