from pathlib import Path

import pytest

from roipack.image_io import load_image

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def street():
    return load_image(DATA / "street.png")


@pytest.fixture(scope="session")
def thermal():
    return load_image(DATA / "thermal.png")
