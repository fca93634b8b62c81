"""Tests for the command-line interface."""

import json

import numpy as np
import pytest

from orchard import imgio
from orchard.cli import main
from orchard.scene import load_scene

REFERENCE_SCORE_ARGS = ["score", "--cr", "10", "--ct", "10",
                        "--t", "100", "--d", "150", "--k", "0"]


@pytest.fixture(scope="module")
def scene_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "scene.json"
    assert main(["gen-scene", "--seed", "11", "-o", str(path)]) == 0
    return path


def test_gen_scene_writes_loadable_json(scene_file):
    data = json.loads(scene_file.read_text())
    assert data["rng_seed"] == 11
    scene = load_scene(scene_file)
    assert len(scene.beds) == 27


def test_render_writes_images(scene_file, tmp_path):
    ppm = tmp_path / "frame.ppm"
    pfm = tmp_path / "depth.pfm"
    code = main(["render", "--scene", str(scene_file),
                 "--pose", "1.0 2.25 1.0 -1.5707963",
                 "-o", str(ppm), "--depth", str(pfm)])
    assert code == 0
    rgb = imgio.read_ppm(str(ppm))
    assert rgb.shape == (480, 640, 3)
    assert rgb.max() > 0
    depth = imgio.read_pfm(str(pfm))
    assert depth.shape == (480, 640)


def test_render_honors_camera_config(scene_file, tmp_path):
    config = tmp_path / "small.json"
    config.write_text(json.dumps({"camera": {"width": 320, "height": 240,
                                             "focal": 262.5}}))
    ppm = tmp_path / "small.ppm"
    code = main(["--config", str(config),
                 "render", "--scene", str(scene_file),
                 "--pose", "1.0 2.25 1.0 -1.5707963", "-o", str(ppm)])
    assert code == 0
    assert imgio.read_ppm(str(ppm)).shape == (240, 320, 3)


def test_detect_reports_counts(scene_file, tmp_path, capsys):
    dump = tmp_path / "frames"
    code = main(["detect", "--scene", str(scene_file),
                 "--mission", "Tomato 2", "--dump-annotated", str(dump)])
    assert code == 0
    out = capsys.readouterr().out
    assert "bed  2" in out
    assert "total tomato count:" in out
    assert (dump / "bed02_A.ppm").exists()
    assert (dump / "bed02_B.ppm").exists()


def test_detect_accepts_detector_config(scene_file, tmp_path, capsys):
    override = tmp_path / "det.json"
    override.write_text(json.dumps({"detector": {"fruit_area_min": 120.0}}))
    code = main(["detect", "--scene", str(scene_file),
                 "--mission", "Pepper 5", "--detector-config",
                 str(override)])
    assert code == 0
    assert "total pepper count:" in capsys.readouterr().out


def test_plan_writes_trajectory_csv(scene_file, tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = main(["plan", "--scene", str(scene_file),
                 "--mission", "Tomato 2 3", "-o", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x,y,z,yaw"
    assert len(lines) > 100
    first = np.array(lines[1].split(","), dtype=float)
    assert first[0] == 0.0
    assert np.allclose(first[1:4], (-1.0, -2.25, 1.0))
    assert "collisions" in capsys.readouterr().out


def test_run_prints_score(scene_file, capsys):
    code = main(["run", "--scene", str(scene_file),
                 "--mission", "Pepper 5 6"])
    assert code == 0
    out = capsys.readouterr().out
    assert "reported" in out and "score:" in out


def test_batch_writes_all_csvs(tmp_path, capsys):
    report = tmp_path / "report.csv"
    code = main(["batch", "-n", "1", "--seed", "4", "-o", str(report),
                 "--best-k", "1", "--quiet"])
    assert code == 0
    for name in ("report.csv", "report_beds.csv", "report_lengths.csv",
                 "report_plants.csv"):
        assert (tmp_path / name).exists()
    out = capsys.readouterr().out
    assert "mean scores:" in out
    assert "best-1 mean score:" in out
    rows = report.read_text().splitlines()
    assert len(rows) == 2   # header + one mission


def test_score_reference_point(capsys):
    assert main(REFERENCE_SCORE_ARGS) == 0
    out = capsys.readouterr().out
    assert "p   100.0000" in out


def test_score_custom_bases(capsys):
    code = main(["score", "--cr", "5", "--ct", "5", "--t", "200",
                 "--d", "300", "--k", "0",
                 "--t-base", "200", "--d-base", "300"])
    assert code == 0
    assert "p   100.0000" in capsys.readouterr().out


def test_errors_exit_nonzero(scene_file, tmp_path, capsys):
    assert main(["detect", "--scene", str(scene_file),
                 "--mission", "Grape 1"]) == 2
    assert "unknown plant" in capsys.readouterr().err
    assert main(["render", "--scene", str(scene_file),
                 "--pose", "1 2 3", "-o", str(tmp_path / "x.ppm")]) == 2
    assert main(["run", "--scene", str(tmp_path / "missing.json"),
                 "--mission", "Tomato 1"]) == 2
    assert main(["score", "--cr", "1", "--ct", "1", "--t", "-5",
                 "--d", "1", "--k", "0"]) == 2
    capsys.readouterr()


def test_bad_config_file_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad), *REFERENCE_SCORE_ARGS]) == 2
    assert "error:" in capsys.readouterr().err
