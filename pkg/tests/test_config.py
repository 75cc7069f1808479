import pytest
import yaml

from nvmirror import materials as mat
from nvmirror.config import ConfigError, build_config, default_config_text, load_config
from nvmirror.dipole import GEOMETRIC_WEIGHTS, REPORTED_WEIGHTS


def raw(**over):
    r = yaml.safe_load(default_config_text())
    for k, v in over.items():
        r[k] = v
    return r


def write(tmp_path, data):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(data))
    return p


def test_defaults():
    cfg = load_config()
    assert len(cfg.lambda_grid) == 361 and len(cfg.d_grid) == 2001
    assert cfg.lambda_grid[0] == 540.0 and cfg.lambda_grid[-1] == 900.0
    assert cfg.d_grid[0] == 500.0 and cfg.d_grid[-1] == 20500.0
    assert cfg.env.depth == 8.0 and cfg.env.n_host == 2.41
    assert cfg.env.weights == REPORTED_WEIGHTS
    assert cfg.geometry.numerical_aperture == 0.35
    assert not cfg.geometry.include_bottom_transmission
    assert cfg.normalization == "raw"
    assert cfg.env.upward_stack.exit.name == "silver"


def test_override_merges(tmp_path):
    cfg = load_config(write(tmp_path, {"emitter": {"weights": "geometric"}, "collection": {"numerical_aperture": 0.7}}))
    assert cfg.env.weights == GEOMETRIC_WEIGHTS
    assert cfg.geometry.numerical_aperture == 0.7
    assert cfg.env.depth == 8.0
    assert cfg.base_dir == tmp_path


def test_fingerprint_tracks_content(tmp_path):
    a = load_config().fingerprint
    assert a == load_config().fingerprint
    assert a != load_config(write(tmp_path, {"emitter": {"depth_nm": 9.0}})).fingerprint


def test_material_replaced_whole(tmp_path):
    cfg = load_config(write(tmp_path, {"materials": {"silver": {"n": 0.05, "k": 4.5}}}))
    assert mat.complex_index(cfg.materials["silver"], 700.0) == 0.05 + 4.5j


def test_extra_layers_and_ideal_mirror(tmp_path):
    data = {
        "materials": {"glass": {"n": 1.5}},
        "stack": {"mirror": "ideal_mirror", "layers": [{"material": "glass", "thickness_nm": 50}]},
    }
    cfg = load_config(write(tmp_path, data))
    st = cfg.environment(800.0).upward_stack
    assert [l.thickness for l in st.layers] == [800.0, 50.0]
    assert st.exit is mat.IDEAL_MIRROR


@pytest.mark.parametrize(
    "data, field",
    [
        ({"materials": {"silver": {"table": "nope.csv"}}}, "materials.silver.table"),
        ({"stack": {"mirror": "gold"}}, "stack.mirror"),
        ({"stack": {"gap": "ideal_mirror"}}, "stack.gap"),
        ({"stack": {"host": "silver"}}, "stack.host"),
        ({"grids": {"d_nm": {"start": 0, "stop": 10, "step": 1}}}, "grids.d_nm.start"),
        ({"grids": {"lambda_nm": {"start": 500, "stop": 400, "step": 1}}}, "grids.lambda_nm"),
        ({"grids": {"lambda_nm": {"start": 500, "stop": 600, "step": 0}}}, "grids.lambda_nm.step"),
        ({"grids": {"lambda_nm": {"start": 100, "stop": 600, "step": 1}}}, "grids.lambda_nm"),
        ({"emitter": {"weights": "uniform"}}, "emitter.weights"),
        ({"collection": {"numerical_aperture": 3}}, "collection.numerical_aperture"),
        ({"collection": {"normalization": "magic"}}, "collection.normalization"),
        ({"workers": 0}, "workers"),
        ({"stack": {"layers": [{"material": "air"}]}}, "stack.layers[0]"),
    ],
)
def test_errors_name_the_field(tmp_path, data, field):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, data))
    assert info.value.field == field


def test_bad_yaml(tmp_path):
    p = tmp_path / "x.yaml"
    p.write_text("a: [1,\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(p)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")


def test_build_config_direct():
    cfg = build_config(raw(workers=3))
    assert cfg.workers == 3
