import json

import pytest

from lpmlat.cli import main


@pytest.fixture
def scen(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"frame_count": 600, "seed": 2}))
    return p


def test_simulate_row_count_and_determinism(tmp_path, scen):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", str(scen), str(a)]) == 0
    assert main(["simulate", str(scen), str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1 + 600 * 4


def test_default_scenario_row_count(tmp_path):
    s = tmp_path / "s.json"
    s.write_text("{}")
    out = tmp_path / "m.csv"
    assert main(["simulate", str(s), str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 40000


def test_seed_env_override(tmp_path, scen, monkeypatch):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    main(["simulate", str(scen), str(a)])
    monkeypatch.setenv("LPM_SEED", "99")
    main(["simulate", str(scen), str(b)])
    assert a.read_bytes() != b.read_bytes()
    s99 = tmp_path / "s99.json"
    s99.write_text(json.dumps({"frame_count": 600, "seed": 99}))
    monkeypatch.delenv("LPM_SEED")
    main(["simulate", str(s99), str(c)])
    assert b.read_bytes() == c.read_bytes()


def test_solve_outputs(tmp_path, scen, capsys):
    m, f = tmp_path / "m.csv", tmp_path / "f.csv"
    main(["simulate", str(scen), str(m)])
    capsys.readouterr()
    code = main(["solve", str(m), str(scen), str(f), "--method", "linear-filtered", "--filter-N", "15", "--passes", "3"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["method"] == "linear-filtered" and report["delay_frames"] == 21
    assert report["frames"] == report["frames_solved"] + report["warmup"] + report["degenerate"]
    lines = f.read_text().splitlines()
    assert lines[0] == "frame,x_m,y_m,offset_m,residual_norm,condition,converged,degenerate,warmup"
    assert len(lines) == 601


def test_solve_oracle_filter(tmp_path, scen, capsys):
    m, f = tmp_path / "m.csv", tmp_path / "f.csv"
    main(["simulate", str(scen), str(m)])
    capsys.readouterr()
    assert main(["solve", str(m), str(scen), str(f), "--method", "linear-filtered", "--oracle-filter"]) == 0
    assert json.loads(capsys.readouterr().out)["mean_path_error_m"] <= 1e-9


def test_filter_settings_from_scenario_file(tmp_path, capsys):
    s = tmp_path / "s.json"
    s.write_text(json.dumps({"frame_count": 400, "filter": {"window": 11, "passes": 2, "variance_window": 11}}))
    m, f = tmp_path / "m.csv", tmp_path / "f.csv"
    main(["simulate", str(s), str(m)])
    capsys.readouterr()
    main(["solve", str(m), str(s), str(f), "--method", "linear-filtered"])
    assert json.loads(capsys.readouterr().out)["delay_frames"] == 10
    main(["solve", str(m), str(s), str(f), "--method", "linear-filtered", "--passes", "4"])
    assert json.loads(capsys.readouterr().out)["delay_frames"] == 20


def test_usage_errors(tmp_path, scen, capsys):
    with pytest.raises(SystemExit) as e:
        main(["solve", "m.csv", str(scen), "f.csv", "--method", "kalman"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["reproduce", "--figure", "5", str(tmp_path)])
    assert e.value.code == 1


def test_data_errors(tmp_path, scen, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", str(bad), str(tmp_path / "x.csv")]) == 2
    bad.write_text(json.dumps({"frame_cont": 3}))
    assert main(["simulate", str(bad), str(tmp_path / "x.csv")]) == 2
    assert main(["solve", str(tmp_path / "missing.csv"), str(scen), str(tmp_path / "f.csv")]) == 2
    m = tmp_path / "m.csv"
    main(["simulate", str(scen), str(m)])
    five = tmp_path / "five.json"
    five.write_text(json.dumps({"station_count": 5, "frame_count": 600}))
    assert main(["solve", str(m), str(five), str(tmp_path / "f.csv")]) == 2
    assert main(["solve", str(m), str(scen), str(tmp_path / "f.csv"), "--filter-N", "4",
                 "--method", "linear-filtered"]) == 2
    monkeypatch.setenv("LPM_SEED", "x")
    assert main(["simulate", str(scen), str(m)]) == 1


def test_bench(scen, capsys):
    assert main(["bench", str(scen), "--repetitions", "2", "--json"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["repetitions"] == 2 and "time_ratio" in res
    assert main(["bench", str(scen), "--repetitions", "1"]) == 0
    assert "linear-filtered" in capsys.readouterr().out


@pytest.mark.parametrize("figure", [4, 9])
def test_reproduce(tmp_path, figure, capsys):
    out = tmp_path / f"fig{figure}"
    assert main(["reproduce", "--figure", str(figure), str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    for name in summary["files"]:
        assert (out / name).exists()
    scen = json.loads((out / "scenario.json").read_text())
    assert "filter" in scen
    if figure == 4:
        header = (out / "estimates_linear.csv").read_text().splitlines()[0]
        assert header.startswith("frame,epoch,x_m,y_m,error_m")
        assert 0.1 <= summary["reports"]["linear"]["mean_path_error_m"] <= 1.0
    else:
        header = (out / "filter_channel.csv").read_text().splitlines()[0]
        assert header == "frame,raw_m,filtered_m,variance_m2,weight,outlier,warmup"
