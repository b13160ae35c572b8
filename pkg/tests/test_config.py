import math

import pytest

from ricci_pinch.cli import builtin_config
from ricci_pinch.config import ConfigError, load_config, parse_config
from ricci_pinch.geometry import ConstantCurvature, ProductOfSpheres

BASE = """format_version = 1
name = "demo"
seed = 5

[geometry]
type = "constant_curvature"
n = 4
radius = 2.0
"""


def test_parse_minimal():
    cfg = parse_config(BASE)
    assert cfg.geometry == ConstantCurvature(4, 0.25)
    assert cfg.seed == 5
    assert cfg.csv_path == "demo.csv" and cfg.summary_path == "demo.json"


def test_parse_full(tmp_path):
    text = BASE.replace('type = "constant_curvature"\nn = 4\nradius = 2.0',
                        'type = "product_spheres"\ndims = [2, 2]\nradii = [1.0, 1.5]')
    text += '\n[flow]\nt_end = 0.5\nsafety = 0.02\n\n[pinch]\nC1 = 1.2\n\n[outputs]\ncsv_path = "x.csv"\n'
    p = tmp_path / "demo.toml"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg.geometry == ProductOfSpheres(2, 1.0, 2, 1.5)
    assert cfg.t_end == 0.5 and cfg.controls.safety == 0.02
    assert cfg.pinch.C1 == 1.2
    assert cfg.csv_path == "x.csv"


@pytest.mark.parametrize("edit,key,line", [
    (("radius = 2.0", "radius = -1.0"), "geometry.radius", 8),
    (("seed = 5\n", ""), "seed", None),
    (("n = 4", "n = 4\nspin = 3"), "geometry.spin", 8),
    (('type = "constant_curvature"', 'type = "torus"'), "geometry.type", 6),
    (("radius = 2.0", "radius = nan"), "geometry.radius", 8),
])
def test_errors_name_key_and_line(edit, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(BASE.replace(*edit))
    assert info.value.key == key
    if line is not None:
        assert info.value.line == line
        assert f"(line {line})" in str(info.value)


def test_unsupported_format_version():
    with pytest.raises(ConfigError) as info:
        parse_config(BASE.replace("format_version = 1", "format_version = 2"))
    assert info.value.key == "format_version"


def test_bad_pinch_constant():
    with pytest.raises(ConfigError):
        parse_config(BASE + "\n[pinch]\ngamma = 3.0\n")


def test_invalid_toml():
    with pytest.raises(ConfigError):
        parse_config("name = ")


def test_builtins_parse(scenario_names):
    assert len(scenario_names) >= 13
    for name in scenario_names:
        cfg = builtin_config(name)
        assert cfg.name == name
        assert math.isfinite(cfg.t_end)
