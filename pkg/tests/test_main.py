import json

import pytest

from sqpack.domain.geometry import PlacedSquare, Point, Region
from sqpack.domain.models import Layout
from sqpack.infrastructure.adapters.storage.json_layout_store import JsonLayoutRepository
from sqpack.main import cli, effective_threads, load_config, parse_xs


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("SQPACK_CONFIG", raising=False)
    monkeypatch.delenv("SQPACK_THREADS", raising=False)
    return tmp_path


def _exit_code(*argv: str) -> int:
    with pytest.raises(SystemExit) as info:
        cli(list(argv))
    return info.value.code


def test_pack_quad_then_verify(capsys, workspace):
    assert _exit_code("pack-quad", "--m", "100", "--theta", "0.1", "--sigma1", "0.01", "--out", "q.json") == 0
    assert "5099 squares" in capsys.readouterr().out
    assert (workspace / "q.json").exists()
    assert _exit_code("verify", "--layout", "q.json") == 0
    assert "layout verified" in capsys.readouterr().out


def test_verify_lists_violations(capsys):
    square = PlacedSquare(Point(1.0, 1.0))
    JsonLayoutRepository().save(Layout.from_squares(Region.rectangle(0, 0, 3, 3), [square, square]), "bad.json")
    assert _exit_code("verify", "--layout", "bad.json") == 1
    out = capsys.readouterr().out
    assert "1 violations" in out
    assert "overlap 0,1" in out


def test_stats_prints_json(capsys):
    assert _exit_code("pack-square", "--x", "20.5", "--out", "s.json") == 0
    capsys.readouterr()
    assert _exit_code("stats", "--layout", "s.json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["square_count"] == 400
    assert report["waste"] == pytest.approx(20.25)
    assert report["flags"] == ["trivial-grid"]


def test_render_writes_svg(workspace):
    assert _exit_code("pack-square", "--x", "20.5", "--out", "s.json") == 0
    assert _exit_code("render", "--layout", "s.json", "--svg", "s.svg", "--stroke-width", "0.1") == 0
    assert (workspace / "s.svg").read_text(encoding="utf-8").startswith("<?xml")


def test_pack_trapezoid_reports_flags(capsys):
    args = ["pack-trapezoid", "--height", "1000", "--base", "3.98", "--slope", "0.0316", "--beta", "0.2"]
    assert _exit_code(*args, "--out", "t.json") == 0
    assert "asymptotic-conditions-unmet" in capsys.readouterr().out


def test_trivial_sweep_then_fit(capsys, workspace):
    assert _exit_code("sweep", "--method", "trivial", "--ks", "32,64,128,256,512", "--out", "t.csv") == 0
    lines = (workspace / "t.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,method,waste,squares,seconds,verified"
    assert lines[1].startswith("32.5,trivial,32.25,1024,")
    capsys.readouterr()
    assert _exit_code("fit", "--csv", "t.csv") == 0
    fields = dict(part.split("=") for part in capsys.readouterr().out.split())
    assert float(fields["slope"]) == pytest.approx(1.0, abs=0.01)
    assert fields["n"] == "5"


def test_untimed_config_gives_identical_csv(workspace):
    (workspace / "config.yaml").write_text("threads: 2\nsweep:\n  timed: false\n", encoding="utf-8")
    argv = ["sweep", "--method", "trivial", "--xs", "10.5,20.5,40.5"]
    assert _exit_code(*argv, "--out", "a.csv") == 0
    assert _exit_code(*argv, "--out", "b.csv") == 0
    assert (workspace / "a.csv").read_bytes() == (workspace / "b.csv").read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--layout", "missing.json"],
        ["pack-quad", "--m", "2", "--theta", "0.1", "--sigma1", "0.01", "--out", "q.json"],
        ["sweep", "--method", "trivial", "--xs", "4.5,a", "--out", "t.csv"],
        ["sweep", "--method", "trivial", "--xs", "8.5,4.5", "--out", "t.csv"],
        ["--config", "missing.yaml", "stats", "--layout", "s.json"],
        ["pack-square", "--x", "10"],
    ],
)
def test_bad_input_exits_2(argv):
    assert _exit_code(*argv) == 2


def test_fit_needs_three_points(workspace):
    assert _exit_code("sweep", "--method", "trivial", "--xs", "4.5,8.5", "--out", "t.csv") == 0
    assert _exit_code("fit", "--csv", "t.csv") == 2


def test_config_helpers(workspace, monkeypatch):
    assert load_config() == {}
    (workspace / "custom.yaml").write_text("threads: 8\n", encoding="utf-8")
    monkeypatch.setenv("SQPACK_CONFIG", "custom.yaml")
    config = load_config()
    assert effective_threads(config) == 8
    monkeypatch.setenv("SQPACK_THREADS", "3")
    assert effective_threads(config) == 3
    assert parse_xs("1.5, 2.5,") == [1.5, 2.5]
