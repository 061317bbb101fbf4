"""Shared fixtures: ephemeral simulators and authenticated engines."""

from __future__ import annotations

from pathlib import Path

import pytest
import requests

from kumoforge.engine import AcquisitionEngine
from kumoforge.providers.simdrive import SimDriveDriver
from kumoforge.simulator import DriveSimulator, FixtureSpec

# The reference account: 9 files, one with 3 revisions, one cloud-native
# document, Google-style hashed metadata.
NINE_FILE_SPEC = FixtureSpec(
    seed=1,
    file_count=9,
    file_size_bytes=65536,
    revision_depths={1 / 9: 3},
    cloud_native_count=1,
)


@pytest.fixture
def start_sim():
    """Factory starting simulators on ephemeral ports; stops them after."""
    sims: list[DriveSimulator] = []

    def _start(spec: FixtureSpec | None = None, **kwargs) -> DriveSimulator:
        sim = DriveSimulator(test_mode=True, **kwargs)
        sim.seed(spec or NINE_FILE_SPEC)
        sim.start()
        sims.append(sim)
        return sim

    yield _start
    for sim in sims:
        sim.stop()


def authenticate(sim: DriveSimulator) -> tuple[SimDriveDriver, object]:
    """Run the full code flow against a simulator."""
    driver = SimDriveDriver(sim.base_url)
    code = requests.get(driver.begin_auth(), timeout=10).json()["code"]
    session = driver.complete_auth(code)
    return driver, session


def make_engine(sim: DriveSimulator, workdir: Path, **kwargs) -> AcquisitionEngine:
    driver, session = authenticate(sim)
    kwargs.setdefault("localdata_dir", workdir / "localdata")
    kwargs.setdefault("downloads_dir", workdir / "downloaded")
    kwargs.setdefault("retry_base_delay", 0.05)
    return AcquisitionEngine(driver, session, **kwargs)
