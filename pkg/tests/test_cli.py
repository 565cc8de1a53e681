import pytest

from quadmap import read_map, read_metrics, write_map
from quadmap.cli import main
from quadmap.sim import random_map


def test_simulate_static_example(tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["simulate", "--scenario", "static", "--ell", "5", "--steps", "11",
            "--schedule-pct", "1,5,2,20,30,5,8,15,40,15,10", "--seed", "7", "--out", str(out)]
    assert main(argv) == 0
    recs = read_metrics(out / "metrics.csv")
    assert len(recs) == 11
    errs = [r.estimate_error for r in recs]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert [r.budget_leaves for r in recs] == [10, 51, 20, 204, 307, 51, 81, 153, 409, 153, 102]
    payloads = sorted((out / "payloads").iterdir())
    assert len(payloads) == 11
    assert [8 * p.stat().st_size for p in payloads] == [r.payload_bits for r in recs]
    assert len(list((out / "estimates").iterdir())) == 11


def test_simulate_amoeba_small(tmp_path):
    out = tmp_path / "amoeba"
    assert main(["simulate", "--scenario", "amoeba", "--ell", "4", "--steps", "5",
                 "--radius", "2", "--schedule-leaves", "10", "--out", str(out)]) == 0
    assert len(read_metrics(out / "metrics.csv")) == 5


def test_simulate_files_and_bits_per_cell(tmp_path):
    paths = []
    for k in range(3):
        p = tmp_path / f"m{k}.csv"
        write_map(random_map(3, seed=k), p)
        paths.append(str(p))
    out = tmp_path / "files"
    assert main(["simulate", "--scenario", "files", "--maps", *paths,
                 "--schedule-leaves", "4,8,64", "--bits-per-cell", "8", "--out", str(out)]) == 0
    recs = read_metrics(out / "metrics.csv")
    assert recs[-1].estimate_error == 0.0
    assert recs[0].nominal_bits == 8 * recs[0].leaves_used


def test_compress_then_decode(tmp_path):
    m = tmp_path / "map.csv"
    prev = tmp_path / "prev.csv"
    write_map(random_map(4, seed=3), m)
    write_map(random_map(4, seed=4), prev)
    assert main(["compress", "--map", str(m), "--estimate", str(prev), "--budget", "22",
                 "--payload", str(tmp_path / "p.mqtc"),
                 "--new-estimate", str(tmp_path / "sender.csv")]) == 0
    assert main(["decode", "--payload", str(tmp_path / "p.mqtc"), "--estimate", str(prev),
                 "--out", str(tmp_path / "receiver.csv")]) == 0
    assert (tmp_path / "sender.csv").read_bytes() == (tmp_path / "receiver.csv").read_bytes()
    assert read_map(tmp_path / "receiver.csv") != read_map(prev)


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--no-such-flag"])
    assert info.value.code != 0
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code != 0


def test_runtime_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0,0\n0,0,0\n0,0,0\n")
    assert main(["compress", "--map", str(bad), "--budget", "1", "--payload", str(tmp_path / "p"),
                 "--new-estimate", str(tmp_path / "e")]) == 1
    assert "power of two" in capsys.readouterr().err
    assert main(["simulate", "--ell", "3", "--schedule-leaves", "1,2", "--steps", "3",
                 "--out", str(tmp_path / "o")]) == 1


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small static run\nscenario = static\nell = 3\nsteps = 4\n"
                   "schedule-leaves = 2,4,8,64\nseed = 5\n")
    out = tmp_path / "cfg"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    recs = read_metrics(out / "metrics.csv")
    assert [r.budget_leaves for r in recs] == [2, 4, 8, 64]
    # explicit flags override the file
    out2 = tmp_path / "cfg2"
    assert main(["simulate", "--config", str(cfg), "--out", str(out2),
                 "--schedule-pct", "100"]) == 0
    assert [r.budget_leaves for r in read_metrics(out2 / "metrics.csv")] == [64] * 4
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 1
