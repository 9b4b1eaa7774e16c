import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(REPO_ROOT / "scripts"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def fb_prev_doc():
    from cipolicy.annotation_io import from_standoff

    return from_standoff((FIXTURES / "fb_prev.json").read_bytes())


@pytest.fixture(scope="session")
def experiment_bundle():
    from cipolicy.bundle import load_bundle

    return load_bundle(FIXTURES / "experiment")


SECTION4_MARKUP = (
    '<flow id="f1"><recipient>We</recipient> also collect '
    "<attribute>contact information</attribute> that <sender>you</sender> provide "
    "<tp>if you upload, sync or import this information (such as an address book) "
    "from a device</tp>.</flow>"
)


@pytest.fixture(scope="session")
def section4_markup() -> str:
    return SECTION4_MARKUP
