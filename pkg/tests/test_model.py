"""Domain model: categorization, filters, path mapping, revision names."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from kumoforge.model import (
    CATEGORY_EXTENSIONS,
    CloudFile,
    FileCategory,
    FilterSpec,
    HashAlgorithm,
    HashClaim,
    HashProvenance,
    OFFICEDOC_CATEGORIES,
    PathAllocator,
    Revision,
    categorize_file,
    format_timestamp_ms,
    matches,
    parse_revision_filename,
    parse_timestamp_ms,
    revision_filename,
    sanitize_local_path,
)

UTC = timezone.utc


def make_file(name: str, cloud_native: bool = False, file_id: str = "fid-1") -> CloudFile:
    return CloudFile(
        file_id=file_id,
        remote_path=f"My Drive/{name}",
        name=name,
        size_bytes=10,
        modified_time=datetime(2015, 6, 1, tzinfo=UTC),
        cloud_native=cloud_native,
        export_formats=("pdf",) if cloud_native else (),
    )


# -- categorize_file ---------------------------------------------------------


def test_categorize_known_examples():
    assert categorize_file("resume.docx", False) is FileCategory.DOC
    assert categorize_file("tree.py", False) is FileCategory.TEXT
    assert categorize_file("archive", False) is FileCategory.OTHER


def test_categorize_case_insensitive():
    assert categorize_file("SCAN.PDF", False) is FileCategory.PDF
    assert categorize_file("Photo.JpG", False) is FileCategory.IMAGE


def test_categorize_cloud_native_kinds():
    assert categorize_file("Notes.gdoc", True) is FileCategory.DOC
    assert categorize_file("Ledger.gsheet", True) is FileCategory.XLS
    assert categorize_file("Deck.gslides", True) is FileCategory.PPT
    # Unmarked cloud-native artifacts are documents.
    assert categorize_file("Case Summary", True) is FileCategory.DOC


def test_categorize_rejects_empty_name():
    with pytest.raises(ValueError):
        categorize_file("", False)


def test_extension_table_has_no_overlaps():
    seen: dict[str, FileCategory] = {}
    for category, extensions in CATEGORY_EXTENSIONS.items():
        for ext in extensions:
            assert ext not in seen, f"{ext} claimed by {seen.get(ext)} and {category}"
            seen[ext] = category


@given(st.text(min_size=1, max_size=40))
def test_categorize_total_and_deterministic(name):
    first = categorize_file(name, False)
    assert first is categorize_file(name, False)
    assert isinstance(first, FileCategory)


# -- matches -----------------------------------------------------------------


def test_matches_examples():
    assert matches(FilterSpec.for_category(FileCategory.IMAGE), make_file("photo.png"))
    assert matches(FilterSpec.all(), make_file("anything.bin"))
    assert matches(FilterSpec.officedocs(), make_file("budget.xlsx"))
    assert not matches(FilterSpec.officedocs(), make_file("scan.pdf"))


def test_matches_manifest():
    filt = FilterSpec.manifest(["a", "b"])
    assert matches(filt, make_file("x.txt", file_id="a"))
    assert not matches(filt, make_file("x.txt", file_id="c"))


_names = st.builds(
    lambda stem, ext: stem + ext,
    st.text(
        alphabet=st.characters(blacklist_characters="/\x00", blacklist_categories=("Cs",)),
        min_size=1,
        max_size=12,
    ),
    st.sampled_from(
        sorted(ext for exts in CATEGORY_EXTENSIONS.values() for ext in exts)
        + ["", ".zip", ".xyz"]
    ),
)


@given(_names)
def test_officedocs_equals_union_of_categories(name):
    file = make_file(name)
    union = any(
        matches(FilterSpec.for_category(cat), file) for cat in OFFICEDOC_CATEGORIES
    )
    assert matches(FilterSpec.officedocs(), file) == union


def test_from_name_resolves_taxonomy():
    assert FilterSpec.from_name("all").kind.value == "all"
    assert FilterSpec.from_name("officedocs").kind.value == "officedocs"
    assert FilterSpec.from_name("pdf").category is FileCategory.PDF
    with pytest.raises(ValueError):
        FilterSpec.from_name("spreadsheets")


# -- hash claims ---------------------------------------------------------------


def test_hash_claim_validation():
    HashClaim(HashAlgorithm.MD5, "a" * 32, HashProvenance.PROVIDER_CLAIMED)
    HashClaim(HashAlgorithm.SHA256, "b" * 64, HashProvenance.LOCALLY_COMPUTED)
    HashClaim(HashAlgorithm.OPAQUE_REV, "rev-42", HashProvenance.PROVIDER_CLAIMED)
    with pytest.raises(ValueError):
        HashClaim(HashAlgorithm.MD5, "a" * 31, HashProvenance.PROVIDER_CLAIMED)
    with pytest.raises(ValueError):
        HashClaim(HashAlgorithm.SHA256, "Z" * 64, HashProvenance.PROVIDER_CLAIMED)


def test_cloud_file_invariants():
    with pytest.raises(ValueError):
        CloudFile(
            file_id="x",
            remote_path="My Drive/a",
            name="b",
            size_bytes=1,
            modified_time=datetime(2015, 1, 1, tzinfo=UTC),
        )
    with pytest.raises(ValueError):
        # cloud-native with a content hash claim
        CloudFile(
            file_id="x",
            remote_path="My Drive/a",
            name="a",
            size_bytes=1,
            modified_time=datetime(2015, 1, 1, tzinfo=UTC),
            cloud_native=True,
            export_formats=("pdf",),
            provider_hash=HashClaim(
                HashAlgorithm.MD5, "a" * 32, HashProvenance.PROVIDER_CLAIMED
            ),
        )


# -- sanitize_local_path -------------------------------------------------------


ROOT = Path("/evidence/root")


def test_sanitize_plain_path_preserved():
    assert sanitize_local_path("My Drive/ppt test", "id1", ROOT) == ROOT / "My Drive" / "ppt test"


def test_sanitize_illegal_characters():
    assert sanitize_local_path("a/b:c", "id1", ROOT) == ROOT / "a" / "b_c"
    assert sanitize_local_path('q/we"ird|name?', "id1", ROOT) == ROOT / "q" / "we_ird_name_"


def test_sanitize_dot_segments_cannot_escape():
    path = sanitize_local_path("../../etc/passwd", "id1", ROOT)
    assert ROOT in path.parents
    path = sanitize_local_path("a/./../b", "id1", ROOT)
    assert ROOT in path.parents


def test_allocator_disambiguates_collisions():
    alloc = PathAllocator(ROOT)
    first = alloc.allocate("a/b:c", "id-first")
    second = alloc.allocate("a/b_c", "id-second")
    assert first == ROOT / "a" / "b_c"
    assert second == ROOT / "a" / "b_c.id-second"


def test_allocator_same_remote_path_twice():
    alloc = PathAllocator(ROOT)
    first = alloc.allocate("My Drive/report.txt", "one")
    second = alloc.allocate("My Drive/report.txt", "two")
    assert first != second
    assert second.name == "report.txt.two"


def test_allocator_file_shadowing_directory():
    alloc = PathAllocator(ROOT)
    leaf = alloc.allocate("My Drive/x", "one")
    nested = alloc.allocate("My Drive/x/deep.txt", "two")
    assert leaf != nested
    assert ROOT in nested.parents


_segments = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
    min_size=1,
    max_size=8,
)
_remote_paths = st.lists(_segments, min_size=1, max_size=4).map("/".join)


@given(st.lists(_remote_paths, min_size=1, max_size=8, unique=True))
def test_allocator_is_injective_and_contained(paths):
    alloc = PathAllocator(ROOT)
    allocated = [alloc.allocate(p, f"id{i}") for i, p in enumerate(paths)]
    assert len(set(allocated)) == len(allocated)
    for path in allocated:
        assert ROOT in path.parents


# -- revision naming -----------------------------------------------------------


def rev(ts: datetime, rid: str = "r1", size: int = 4) -> Revision:
    return Revision(revision_id=rid, timestamp=ts, size_bytes=size)


def test_revision_filename_examples():
    ts = datetime(2015, 2, 5, 8, 28, 26, 32000, tzinfo=UTC)
    assert revision_filename("resume.docx", rev(ts)) == "(2015-02-05T08:28:26.032Z) resume.docx"
    epoch = datetime(1970, 1, 1, tzinfo=UTC)
    assert revision_filename("a", rev(epoch)) == "(1970-01-01T00:00:00.000Z) a"


def test_revision_filename_tag_disambiguates():
    ts = datetime(2015, 2, 5, 8, 28, 26, 32000, tzinfo=UTC)
    a = revision_filename("f.txt", rev(ts, "r1"), tag_revision_id=True)
    b = revision_filename("f.txt", rev(ts, "r2"), tag_revision_id=True)
    assert a != b
    assert parse_revision_filename(a) == (ts, "f.txt")


_timestamps = st.integers(
    min_value=0, max_value=4102444800_000  # year 2100, in milliseconds
).map(lambda ms: datetime.fromtimestamp(ms / 1000, tz=UTC))


@given(_timestamps, _segments)
def test_revision_prefix_recovers_timestamp(ts, base_name):
    name = revision_filename(base_name, rev(ts))
    parsed_ts, _ = parse_revision_filename(name)
    assert parsed_ts == ts


_disk_names = st.text(
    alphabet=st.characters(
        blacklist_characters="/\x00\r\n", blacklist_categories=("Cs", "Cc")
    ),
    min_size=1,
    max_size=12,
)


@given(_timestamps, _disk_names)
def test_revision_filename_round_trip(ts, base_name):
    name = revision_filename(base_name, rev(ts))
    parsed_ts, parsed_base = parse_revision_filename(name)
    assert parsed_ts == ts
    assert parsed_base == base_name


@given(_timestamps)
def test_timestamp_format_round_trip(ts):
    assert parse_timestamp_ms(format_timestamp_ms(ts)) == ts


def test_revision_names_injective_for_distinct_timestamps():
    base = datetime(2015, 2, 5, 8, 28, 26, 32000, tzinfo=UTC)
    revisions = [rev(base + timedelta(hours=i), f"r{i}") for i in range(5)]
    names = {revision_filename("doc.txt", r) for r in revisions}
    assert len(names) == 5
