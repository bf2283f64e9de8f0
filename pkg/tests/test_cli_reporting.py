import json

import pytest

from ewl_pricing.charts import Panel, Series, render_svg
from ewl_pricing.cli import main, parse_cli
from ewl_pricing.config import ConfigError, RunConfig, load_config_file
from ewl_pricing.reporting import MANIFEST, RenderError, read_manifest, render_charts

TINY = "steps = 8\nepisodes = 4\neta_samples = 2\nframe = 1\n"


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text("# small run\nsteps = 8\nepisodes = 4\neta_samples = 2\nfrat5_points = 2.3, 3.4\n")
    return path


def test_parse_example():
    cfg = parse_cli(["sweep-eta", "--seed", "7", "--scale", "desk", "--out", "results/"])
    assert cfg.command == "sweep-eta" and cfg.seed == 7 and cfg.scale == "desk" and cfg.out == "results/"
    spec = cfg.sweep_spec()
    assert spec.kind == "eta_sweep" and spec.seed == 7
    assert 0.0 in spec.etas and 2167.0 in spec.etas


@pytest.mark.parametrize("argv", [[], ["episode", "--frat5", "0.9"], ["episode", "--eta", "-1"],
                                  ["episode", "--seed", "x"], ["bogus"], ["episode", "--policy", "oracle"]])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        parse_cli(argv)
    assert exc.value.code == 2


def test_empty_args_print_help(capsys):
    with pytest.raises(SystemExit):
        parse_cli([])
    assert "usage" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(TINY)
    with pytest.raises(ConfigError, match="frame"):
        RunConfig.from_dict(load_config_file(path))
    with pytest.raises(SystemExit) as exc:
        parse_cli(["episode", "--config", str(path)])
    assert exc.value.code == 2


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "nope.cfg")
    with pytest.raises(SystemExit) as exc:
        parse_cli(["episode", "--config", str(tmp_path / "nope.cfg")])
    assert exc.value.code == 2


def test_bad_typed_value(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("steps = many\n")
    with pytest.raises(ConfigError, match="steps"):
        RunConfig.from_dict(load_config_file(path))


def test_precedence_cli_over_file_over_defaults(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("seed = 3\neta = 100\n")
    cfg = parse_cli(["episode", "--config", str(path), "--eta", "50"])
    assert cfg.seed == 3 and cfg.eta == 50.0 and cfg.H == 22


def test_config_text_round_trip(tmp_path):
    cfg = RunConfig(command="sweep-frat5", seed=9, frat5_points=(2.2, 3.3), episodes=5, nu=0.18)
    path = tmp_path / "rt.cfg"
    path.write_text(cfg.to_text())
    assert RunConfig.from_dict(load_config_file(path)) == cfg


def _run(argv):
    assert main(argv) == 0


@pytest.mark.parametrize("command", ["episode", "sweep-eta", "sweep-frat5", "detailed"])
def test_outputs_byte_identical_on_rerun(command, tmp_path, tiny_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    extra = ["--frat5", "2.56"] if command == "detailed" else []
    _run([command, "--config", str(tiny_cfg), "--out", str(a), "--seed", "1"] + extra)
    _run([command, "--config", str(tiny_cfg), "--out", str(b), "--seed", "1", "--workers", "2"] + extra)
    manifest = read_manifest(a)
    assert manifest["outputs"]
    for name in manifest["outputs"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_round_trip(tmp_path, tiny_cfg):
    out = tmp_path / "o"
    _run(["sweep-eta", "--config", str(tiny_cfg), "--out", str(out), "--seed", "2"])
    manifest = json.loads((out / MANIFEST).read_text())
    cfg = parse_cli(["sweep-eta", "--config", str(tiny_cfg), "--out", str(out), "--seed", "2"])
    assert RunConfig.from_dict(manifest["config"]) == cfg
    assert manifest["seed"] == 2
    assert manifest["outputs"] == ["eta_sweep.csv"]
    assert isinstance(manifest["git_describe"], str) and manifest["wall_time_s"] >= 0
    raw = (out / "eta_sweep.csv").read_bytes()
    assert raw.startswith(b"eta,norm_rev,norm_rev_ci99,mse,mse_ci99\r\n")
    # 2 stratified draws plus 0 and 2167
    assert raw.count(b"\r\n") == 5


def test_detailed_writes_one_csv_per_frat5(tmp_path, tiny_cfg):
    out = tmp_path / "d"
    _run(["detailed", "--config", str(tiny_cfg), "--out", str(out)])
    assert read_manifest(out)["outputs"] == ["detailed_2_3.csv", "detailed_3_4.csv"]


def test_render_is_deterministic(tmp_path, tiny_cfg):
    out = tmp_path / "r"
    _run(["sweep-frat5", "--config", str(tiny_cfg), "--out", str(out)])
    _run(["render", "--out", str(out)])
    first = (out / "frat5_grid.svg").read_bytes()
    assert first.startswith(b"<?xml") and b"<svg" in first and b"polygon" in first
    _run(["render", "--out", str(out)])
    assert (out / "frat5_grid.svg").read_bytes() == first


@pytest.mark.parametrize("command", ["episode", "sweep-eta", "detailed"])
def test_render_each_kind(command, tmp_path, tiny_cfg):
    out = tmp_path / command
    _run([command, "--config", str(tiny_cfg), "--out", str(out)])
    svgs = render_charts(out)
    assert svgs and all(p.read_text().rstrip().endswith("</svg>") for p in svgs)


def test_render_missing_csv_names_file(tmp_path, tiny_cfg, caplog):
    out = tmp_path / "m"
    _run(["sweep-eta", "--config", str(tiny_cfg), "--out", str(out)])
    (out / "eta_sweep.csv").unlink()
    with pytest.raises(RenderError, match="eta_sweep.csv"):
        render_charts(out)
    assert main(["render", "--out", str(out)]) == 1
    assert "eta_sweep.csv" in caplog.text


def test_render_malformed_csv(tmp_path, tiny_cfg):
    out = tmp_path / "bad"
    _run(["sweep-eta", "--config", str(tiny_cfg), "--out", str(out)])
    (out / "eta_sweep.csv").write_text("eta,norm_rev\n1,2\n")
    with pytest.raises(RenderError, match="missing columns"):
        render_charts(out)
    (out / "eta_sweep.csv").write_text("eta,norm_rev,norm_rev_ci99,mse,mse_ci99\nx,1,1,1,1\n")
    with pytest.raises(RenderError, match="bad value"):
        render_charts(out)


def test_render_without_manifest(tmp_path):
    with pytest.raises(RenderError, match="manifest"):
        render_charts(tmp_path)


def test_svg_escapes_and_handles_infinite_bands():
    svg = render_svg("a < b", [Panel("t", "x", "y", [Series("s&t", [0, 1], [1, 2], [float("inf"), 0.1])])])
    assert "a &lt; b" in svg and "s&amp;t" in svg and "inf" not in svg
