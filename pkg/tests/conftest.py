import json
from importlib.resources import files

import pytest

from knotforge.geometry import PolygonalKnot


@pytest.fixture(scope="session")
def trefoil24():
    data = json.loads(files("knotforge").joinpath("data/trefoil24.json").read_text())
    return PolygonalKnot(data["vertices"])
