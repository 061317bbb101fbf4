"""CLI grammar and end-to-end flows against the simulator."""

from __future__ import annotations

import io
from pathlib import Path

import pytest
import requests
from hypothesis import given, settings, strategies as st

from conftest import authenticate
from kumoforge.cli import (
    ACTION_DOWNLOAD,
    ACTION_DOWNLOAD_MANIFEST,
    ACTION_LIST,
    CliInvocation,
    main,
    parse_args,
    run,
)
from kumoforge.errors import UsageError
from kumoforge.model import FileCategory, FilterKind
from kumoforge.providers import store_token
from kumoforge.simulator import FixtureSpec


# -- parse_args -----------------------------------------------------------------


def test_parse_list_all_on_dropbox_alias():
    inv = parse_args(["-s", "dbox", "-l", "all"])
    assert inv.service.service_id == "dropbox"
    assert inv.action == ACTION_LIST
    assert inv.filter.kind is FilterKind.ALL


def test_parse_list_images_on_box():
    inv = parse_args(["-s", "box", "-l", "image"])
    assert inv.service.service_id == "box"
    assert inv.action == ACTION_LIST
    assert inv.filter.category is FileCategory.IMAGE


def test_parse_manifest_download():
    inv = parse_args(["-s", "gdrive", "-csv", "/home/user/Desktop/gdrive_list.csv"])
    assert inv.action == ACTION_DOWNLOAD_MANIFEST
    assert inv.manifest_path == Path("/home/user/Desktop/gdrive_list.csv")


def test_parse_download_with_destination():
    inv = parse_args(["-s", "onedrive", "-d", "pdf", "-p", "/tmp/dest"])
    assert inv.action == ACTION_DOWNLOAD
    assert inv.filter.category is FileCategory.PDF
    assert inv.dest_override == Path("/tmp/dest")


@pytest.mark.parametrize(
    "argv",
    [
        ["-s", "gdrive"],  # no action
        ["-s", "gdrive", "-d", "all", "-l", "all"],  # two actions
        ["-s", "gdrive", "-d", "all", "-l"],  # trailing -l without argument
        ["-s", "nope", "-l", "all"],  # unknown service
        ["-s", "gdrive", "-l", "spreadsheets"],  # unknown filter
        ["-l", "all"],  # missing service
        ["-s"],  # dangling option
    ],
)
def test_parse_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_args(argv)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.one_of(
            st.sampled_from(
                ["-s", "-l", "-d", "-csv", "-p", "gdrive", "dbox", "simdrive",
                 "all", "pdf", "image", "bogus", "--config-dir", "/tmp/x", "-", "--"]
            ),
            st.text(max_size=8),
        ),
        max_size=6,
    )
)
def test_parse_args_is_total(argv):
    try:
        result = parse_args(argv)
        assert isinstance(result, CliInvocation)
    except UsageError:
        pass
    except SystemExit:
        pass  # argparse's -h/--help path


def test_usage_error_exit_status(capsys):
    assert main(["-s", "gdrive"]) == 1
    assert "usage error" in capsys.readouterr().err


# -- full runs against the simulator ------------------------------------------------


def cached_cli_args(sim, tmp_path, *tail):
    """Common flags wiring all CLI state under tmp_path."""
    return [
        "--config-dir", str(tmp_path / "config"),
        "--localdata-dir", str(tmp_path / "localdata"),
        "--simulator-url", sim.base_url,
        "-s", "simdrive",
        *tail,
    ]


def precache_token(sim, tmp_path):
    _, session = authenticate(sim)
    store_token(session, tmp_path / "config")
    return session


def test_list_all_prints_table(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    out = io.StringIO()
    status = run(parse_args(cached_cli_args(sim, tmp_path, "-l", "all")), stdout=out)
    assert status == 0
    lines = out.getvalue().splitlines()
    assert "Working..." in lines
    header_at = lines.index("FILE-ID REMOTE PATH REVISION HASH(MD5)")
    rows = lines[header_at + 1 :]
    assert len(rows) == 9
    assert any(" 3 " in row for row in rows)
    assert (tmp_path / "localdata" / "user1@simdrive.example-simdrive.csv").exists()


def test_list_empty_drive(start_sim, tmp_path):
    sim = start_sim(FixtureSpec(seed=2, file_count=0))
    precache_token(sim, tmp_path)
    out = io.StringIO()
    status = run(parse_args(cached_cli_args(sim, tmp_path, "-l", "all")), stdout=out)
    assert status == 0
    assert out.getvalue().splitlines()[-1] == "FILE-ID REMOTE PATH REVISION HASH(MD5)"


def test_list_filter_subset(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    out = io.StringIO()
    run(parse_args(cached_cli_args(sim, tmp_path, "-l", "pdf")), stdout=out)
    lines = out.getvalue().splitlines()
    rows = lines[lines.index("FILE-ID REMOTE PATH REVISION HASH(MD5)") + 1 :]
    expected = sum(1 for f in sim.fixture.files if f.name.lower().endswith(".pdf"))
    assert len(rows) == expected


def test_download_all_summary_and_duration(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    dest = tmp_path / "evidence"
    out = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-d", "all", "-p", str(dest))),
        stdout=out,
    )
    assert status == 0
    lines = out.getvalue().splitlines()
    assert "9 files downloaded and 0 updated from user1@simdrive.example drive" in lines
    assert lines[-1].startswith("Duration: ")
    assert (dest / "simdrive.log").exists()

    rerun = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-d", "all", "-p", str(dest))),
        stdout=rerun,
    )
    assert status == 0
    assert "0 files downloaded and 0 updated from user1@simdrive.example drive" in rerun.getvalue()


def test_download_exit_2_on_integrity_fault(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    requests.post(
        f"{sim.base_url}/admin/fault", json={"kind": "CORRUPT_NEXT_N", "n": 1}, timeout=10
    )
    dest = tmp_path / "evidence"
    out = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-d", "all", "-p", str(dest))),
        stdout=out,
    )
    assert status == 2
    text = out.getvalue()
    assert "and 1 failed from user1@simdrive.example drive" in text
    assert "INTEGRITY_MISMATCH" in text
    assert any((dest / "quarantine").rglob("*"))


def test_download_manifest_subset(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    wanted = [f.file_id for f in sim.fixture.files[:3]]
    manifest_csv = tmp_path / "subset.csv"
    manifest_csv.write_text("".join(f"{fid},x,1,-\n" for fid in wanted))

    dest = tmp_path / "evidence"
    out = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-csv", str(manifest_csv), "-p", str(dest))),
        stdout=out,
    )
    assert status == 0
    assert "3 files downloaded and 0 updated" in out.getvalue()
    sidecars = list((dest / "metadata").glob("*.acquisition.json"))
    assert {p.name.split(".")[0] for p in sidecars} == set(wanted)


def test_download_manifest_unknown_id(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    manifest_csv = tmp_path / "bad.csv"
    manifest_csv.write_text("ZZZ,x,1,-\n")
    out = io.StringIO()
    with pytest.raises(Exception) as err:
        run(parse_args(cached_cli_args(sim, tmp_path, "-csv", str(manifest_csv))), stdout=out)
    assert getattr(err.value, "code", "") == "UNKNOWN_MANIFEST_ID"


def test_interactive_auth_flow(start_sim, tmp_path):
    sim = start_sim()
    code = requests.get(
        f"{sim.base_url}/oauth/authorize", params={"client_id": "kumoforge"}, timeout=10
    ).json()["code"]
    out = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-l", "all")),
        stdin=io.StringIO(code + "\n"),
        stdout=out,
    )
    assert status == 0
    assert "Visit this URL in a browser" in out.getvalue()
    assert (tmp_path / "config" / "simdrive.dat").exists()
    # second invocation uses the cache, no prompting
    out2 = io.StringIO()
    status = run(parse_args(cached_cli_args(sim, tmp_path, "-l", "all")), stdout=out2)
    assert status == 0
    assert "Visit this URL" not in out2.getvalue()


def test_expired_token_triggers_reauth(start_sim, tmp_path):
    sim = start_sim()
    precache_token(sim, tmp_path)
    requests.post(f"{sim.base_url}/admin/fault", json={"kind": "EXPIRE_TOKENS"}, timeout=10)
    fresh_code = requests.get(
        f"{sim.base_url}/oauth/authorize", params={"client_id": "kumoforge"}, timeout=10
    ).json()["code"]
    out = io.StringIO()
    status = run(
        parse_args(cached_cli_args(sim, tmp_path, "-l", "all")),
        stdin=io.StringIO(fresh_code + "\n"),
        stdout=out,
    )
    assert status == 0
    assert "FILE-ID REMOTE PATH REVISION HASH(MD5)" in out.getvalue()


def test_output_stable_across_identical_fixtures(start_sim, tmp_path):
    """Two runs on identical fixtures differ only in TIME(UTC)/Duration."""

    def run_once(label: str) -> list[str]:
        sim = start_sim()
        work = tmp_path / label
        precache_token(sim, work)
        out = io.StringIO()
        status = run(
            parse_args(cached_cli_args(sim, work, "-d", "all", "-p", str(work / "dest"))),
            stdout=out,
        )
        assert status == 0
        lines = []
        for line in out.getvalue().splitlines():
            if line.startswith("Duration: "):
                line = "Duration: <t>"
            elif line and line[:4].isdigit():  # log lines start with the date
                line = "<t> " + line.split(" ", 2)[2]
            lines.append(line.replace(str(work), "<work>"))
        return lines

    assert run_once("one") == run_once("two")


def test_main_exit_status_via_entry_point(start_sim, tmp_path, capsys):
    sim = start_sim()
    precache_token(sim, tmp_path)
    dest = tmp_path / "evidence"
    status = main(cached_cli_args(sim, tmp_path, "-d", "all", "-p", str(dest)))
    assert status == 0
    assert "9 files downloaded" in capsys.readouterr().out
