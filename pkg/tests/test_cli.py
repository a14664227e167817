import json

import pytest

from riotfront.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_equilibria_closed_form(capsys):
    code, out, _ = run(capsys, "equilibria", "--gamma", "4", "--beta", "1", "--p", "0")
    assert code == 0
    assert json.loads(out)["u_bar"] == pytest.approx(0.5, abs=1e-12)


def test_domain_error_exit_1(capsys):
    code, _, err = run(capsys, "equilibria", "--gamma", "2", "--beta", "1", "--p", "1")
    assert code == 1 and "NoPositiveEquilibrium" in err


@pytest.mark.parametrize(
    "argv",
    [["bogus"], ["equilibria", "--nope", "1"], ["sweep", "--gamma", "4", "--start", "1", "--stop", "2", "--count", "0"], []],
)
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_kpp_check(capsys):
    code, out, _ = run(capsys, "kpp-check", "--beta", "2", "--p", "1", "--gamma", "4")
    d = json.loads(out)
    assert code == 0
    assert d["guaranteed"] is True and d["numeric_concave"] is True
    assert d["p_threshold"] == pytest.approx(1.0) and d["min_speed"] == pytest.approx(2.0)


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--gamma", "4", "--beta", "1", "--p", "2", "--omega", "1", "--c", "1", "--at", "A")
    assert code == 0 and json.loads(out)["class"] == "Saddle"


def test_outputs_deterministic(tmp_path, capsys):
    argv = ["shoot", "--gamma", "4", "--beta", "1", "--p", "2", "--omega", "0.5", "--c", "1"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for name in ("orbit.csv", "shoot.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "a" / "shoot.json").read_text())["connected"] is True


def test_config_round_trip(tmp_path, capsys):
    code, first, _ = run(capsys, "equilibria", "--gamma", "7", "--beta", "3", "--p", "1.5", "--omega", "2", "--c", "0.5")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(first)
    code2, second, _ = run(capsys, "equilibria", "--config", str(cfg))
    assert code == code2 == 0 and first == second
    # flags override the config
    _, third, _ = run(capsys, "equilibria", "--config", str(cfg), "--gamma", "8")
    assert json.loads(third)["gamma"] == 8.0


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{nope")
    assert main(["equilibria", "--config", str(cfg)]) == 2


def test_simulate_and_front_speed(tmp_path, capsys):
    out = tmp_path / "sim"
    argv = [
        "simulate", "--gamma", "4", "--beta", "3", "--p", "1", "--mode", "scalar", "--frame", "lab",
        "--L", "100", "--nx", "1001", "--dtau", "0.01", "--t_end", "30", "--snapshot-every", "100", "--out", str(out),
    ]
    assert main(argv) == 0
    summary = json.loads(capsys.readouterr().out)
    for key in ("front_speed", "fit_residual", "stationarity_residual_series", "min_u", "min_v"):
        assert key in summary
    assert summary["front_speed"] == pytest.approx(2.0, rel=0.1)
    snaps = sorted(out.glob("snap_*.csv"))
    assert len(snaps) == 31 and snaps[0].name == "snap_00000.csv"
    assert snaps[0].read_text().splitlines()[0] == "x,u,v"
    assert main(["front-speed", "--snapshots", str(out), "--level", "0.1", "--discard", "0.5"]) == 0
    fs = json.loads(capsys.readouterr().out)
    assert fs["front_speed"] == pytest.approx(summary["front_speed"], rel=0.05)


def test_simulate_requires_grid(capsys):
    assert main(["simulate", "--gamma", "4", "--beta", "1", "--p", "1"]) == 2


def test_sweep(capsys):
    code, out, _ = run(
        capsys, "sweep", "--gamma", "4", "--beta", "1", "--p", "2", "--c", "1",
        "--start", "0.01", "--stop", "100", "--count", "9", "--workers", "3",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "omega,connected,approach,crossing_u,crossing_v"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 9
    assert all(r[1] == "true" for r in rows)
    omegas = [float(r[0]) for r in rows]
    assert omegas == sorted(omegas)
    # inside (omega1, omega2) the approach turns oscillatory
    assert [r[2] for r in rows] == ["Monotone"] * 5 + ["Oscillatory"] + ["Monotone"] * 3
    # small omega reaches B without meeting the u-nullcline (nan); the rest climb with omega
    vs = [float(r[4]) for r in rows if r[4] != "nan"]
    assert len(vs) >= 4
    assert all(b > a for a, b in zip(vs, vs[1:]))


def test_sweep_json(tmp_path, capsys):
    assert main(["sweep", "--gamma", "4", "--beta", "1", "--p", "2", "--c", "1", "--start", "0.1", "--stop", "10",
                 "--count", "3", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    d = json.loads((tmp_path / "sweep.json").read_text())
    assert d["all_connected"] is True and d["crossing_monotone"] is True
