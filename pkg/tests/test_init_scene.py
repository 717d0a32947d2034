import json

import pytest

from app.schemas.schemas import Scene
from scripts.init_scene import build_scene, coordinates, validate_n, write_scene


@pytest.mark.parametrize(
    "text, valid",
    [("1", True), ("4", True), ("0", False), ("5", False), ("two", False), ("-1", False), ("", False)],
)
def test_validate_n(text, valid):
    assert validate_n(text)[0] is valid


def test_coordinates():
    assert coordinates(1) == ["x", "y", "z"]
    assert coordinates(2) == ["x1", "x2", "y1", "y2", "z"]


def test_build_scene_is_valid():
    scene = Scene.model_validate(build_scene(2))
    assert scene.forms["alpha"] == "d z + x1*d y1 + x2*d y2"
    assert len(scene.grid.bounds) == 5


def test_write_scene(tmp_path):
    path = write_scene(tmp_path / "scenes" / "std.json", 1)
    assert json.loads(path.read_text(encoding="utf-8"))["coords"] == ["x", "y", "z"]
    with pytest.raises(FileExistsError):
        write_scene(path, 1)
    write_scene(path, 2, overwrite=True)
    assert len(json.loads(path.read_text(encoding="utf-8"))["coords"]) == 5
