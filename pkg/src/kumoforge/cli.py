"""Command-line front end.

Grammar: ``kumoforge -s <service> <action> [filter]`` with exactly one
action per invocation:

  -l <filter>    list stored files as a plain-text table (writes the
                 discovery CSV as a side effect)
  -d <filter>    download files matching the filter
  -csv <file>    download the files listed in a manifest CSV

Exit status: 0 success, 1 usage error, 2 when any item failed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from kumoforge.engine import AcquisitionEngine, read_manifest_ids, select
from kumoforge.errors import (
    KumoforgeError,
    NotAuthenticated,
    TokenExpired,
    UsageError,
)
from kumoforge.model import FILTER_NAMES, FilterSpec, LOG_HEADER
from kumoforge.providers import (
    DEFAULT_SIMULATOR_URL,
    ServiceDescriptor,
    load_token,
    make_driver,
    resolve_service,
    store_token,
    token_path,
)

LIST_HEADER = "FILE-ID REMOTE PATH REVISION HASH(MD5)"

ACTION_LIST = "list"
ACTION_DOWNLOAD = "download"
ACTION_DOWNLOAD_MANIFEST = "download_manifest"


@dataclass(frozen=True)
class CliInvocation:
    service: ServiceDescriptor
    action: str
    filter: FilterSpec | None = None
    manifest_path: Path | None = None
    dest_override: Path | None = None
    config_dir: Path = Path("config")
    localdata_dir: Path = Path("localdata")
    simulator_url: str = DEFAULT_SIMULATOR_URL


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as UsageError (exit 1)."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="kumoforge",
        description="acquire cloud-drive contents into a hash-verified evidence tree",
        add_help=True,
        allow_abbrev=False,
    )
    parser.add_argument("-s", metavar="SERVICE", dest="service", required=True,
                        help="gdrive, dropbox (dbox), onedrive, box, or simdrive")
    parser.add_argument("-l", metavar="FILTER", dest="list_filter",
                        help="list stored files matching the filter")
    parser.add_argument("-d", metavar="FILTER", dest="download_filter",
                        help="download files matching the filter")
    parser.add_argument("-csv", metavar="FILE", dest="manifest_csv",
                        help="download the files listed in a CSV manifest")
    parser.add_argument("-p", metavar="PATH", dest="dest_override",
                        help="destination directory override")
    parser.add_argument("--config-dir", default="config",
                        help="token cache directory (default: config)")
    parser.add_argument("--localdata-dir", default="localdata",
                        help="discovery CSV directory (default: localdata)")
    parser.add_argument("--simulator-url", default=DEFAULT_SIMULATOR_URL,
                        help="base URL of the simdrive service")
    return parser


def parse_args(argv: list[str]) -> CliInvocation:
    """Total: every argv yields an invocation or a UsageError."""
    ns = build_parser().parse_args(argv)

    service = resolve_service(ns.service)

    chosen = [
        name
        for name, value in (
            ("-l", ns.list_filter),
            ("-d", ns.download_filter),
            ("-csv", ns.manifest_csv),
        )
        if value is not None
    ]
    if len(chosen) != 1:
        raise UsageError(
            "exactly one action required: -l <filter>, -d <filter>, or -csv <file>"
        )

    filter_spec = None
    manifest_path = None
    if ns.manifest_csv is not None:
        action = ACTION_DOWNLOAD_MANIFEST
        manifest_path = Path(ns.manifest_csv)
    else:
        name = ns.list_filter if ns.list_filter is not None else ns.download_filter
        if name not in FILTER_NAMES:
            raise UsageError(
                f"unknown filter {name!r} (expected one of: {', '.join(FILTER_NAMES)})"
            )
        filter_spec = FilterSpec.from_name(name)
        action = ACTION_LIST if ns.list_filter is not None else ACTION_DOWNLOAD

    return CliInvocation(
        service=service,
        action=action,
        filter=filter_spec,
        manifest_path=manifest_path,
        dest_override=Path(ns.dest_override) if ns.dest_override else None,
        config_dir=Path(ns.config_dir),
        localdata_dir=Path(ns.localdata_dir),
        simulator_url=ns.simulator_url,
    )


def _authenticate(inv: CliInvocation, driver, stdin: IO[str], stdout: IO[str]):
    """Cached token, or the interactive URL-and-code flow."""
    try:
        return load_token(inv.service, inv.config_dir)
    except NotAuthenticated:
        pass
    url = driver.begin_auth()
    stdout.write("Visit this URL in a browser to authorize access:\n")
    stdout.write(url + "\n")
    stdout.write("Enter access code: ")
    stdout.flush()
    code = stdin.readline().strip()
    session = driver.complete_auth(code)
    store_token(session, inv.config_dir)
    return session


def run(inv: CliInvocation, *, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> int:
    """Execute one parsed invocation; returns the process exit status."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    driver = make_driver(inv.service, inv.simulator_url)
    session = _authenticate(inv, driver, stdin, stdout)

    engine = AcquisitionEngine(
        driver,
        session,
        localdata_dir=inv.localdata_dir,
        on_line=lambda line: stdout.write(line + "\n"),
    )

    stdout.write("Working...\n")
    try:
        discovery = engine.discover()
    except TokenExpired:
        # Cached token no longer valid: drop it and run the auth flow once.
        token_path(inv.service.service_id, inv.config_dir).unlink(missing_ok=True)
        session = _authenticate(inv, driver, stdin, stdout)
        engine.session = session
        discovery = engine.discover()

    if inv.action == ACTION_LIST:
        stdout.write(LIST_HEADER + "\n")
        matching = select(discovery.manifest, inv.filter)
        keep = {f.file_id for f in matching}
        for row in discovery.manifest.rows:
            if row.file_id in keep:
                stdout.write(
                    f"{row.file_id} {row.remote_path} {row.revision_count} {row.hash_display}\n"
                )
        return 0

    if inv.action == ACTION_DOWNLOAD_MANIFEST:
        try:
            manifest_ids = read_manifest_ids(inv.manifest_path)
        except OSError as exc:
            raise UsageError(f"cannot read manifest CSV {inv.manifest_path}: {exc}")
        filter_spec = FilterSpec.manifest(manifest_ids)
    else:
        filter_spec = inv.filter

    targets = select(discovery.manifest, filter_spec)
    stdout.write(LOG_HEADER + "\n")
    job = engine.acquire(
        targets, filter_used=filter_spec, dest_override=inv.dest_override
    )
    stdout.write(job.summary + "\n")
    stdout.write(f"Duration: {job.duration}\n")
    if job.failures:
        for failure in job.failures:
            stdout.write(
                f"FAILED {failure.file_id} {failure.remote_path} {failure.error_code}\n"
            )
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    try:
        return run(parse_args(argv))
    except UsageError as exc:
        print(f"usage error: {exc.message}", file=sys.stderr)
        return 1
    except KumoforgeError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    raise SystemExit(main())
