import csv
import io

import pytest

from rcclp.cli import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, main

CFG = """\
[instance]
n = 4
m = 12
d = 3
radius = {radius}

[schedule]
degree = 2

[levels]
epsilon = 0.2
delta = 1e-4

[run]
n_val = 500
"""


@pytest.fixture
def cfg(tmp_path):
    def make(radius=0.2):
        p = tmp_path / f"r{radius}.cfg"
        p.write_text(CFG.format(radius=radius))
        return str(p)
    return make


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_generate_stdout_and_file(cfg, tmp_path, capsys):
    assert main(["generate", "--config", cfg(), "--seed", "2"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("rcclp-instance 1")
    out = tmp_path / "inst.txt"
    assert main(["generate", "--n", "2", "--m", "6", "--d", "2", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[1] == "n 2"


def test_run_writes_artifacts(cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", cfg(), "--seed", "7", "--out", str(out)]) == EXIT_OK
    r = rows(capsys.readouterr().out)
    assert len(r) == 1 and r[0]["seed"] == "7"
    for name in ("metrics.csv", "trace.jsonl", "solution.json", "instance.txt"):
        assert (out / name).exists()


def test_validate_radius_zero(cfg, tmp_path, capsys):
    out = tmp_path / "run0"
    assert main(["run", "--config", cfg(0.0), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    code = main(["validate", "--instance", str(out / "instance.txt"), "--solution", str(out / "solution.json"),
                 "--n-val", "300"])
    assert code == EXIT_OK
    assert "violation=0.0" in capsys.readouterr().out


def test_validate_failure_exit_code(cfg, tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--config", cfg(), "--out", str(out)])
    code = main(["validate", "--instance", str(out / "instance.txt"), "--solution", str(out / "solution.json"),
                 "--n-val", "300", "--epsilon", "1e-12"])
    # any single violation exceeds this bar; zero violations is also possible
    assert code in (EXIT_OK, EXIT_VALIDATION)
    line = capsys.readouterr().out.strip().splitlines()[-1]
    viol = float(line.split()[0].split("=")[1])
    assert (code == EXIT_VALIDATION) == (viol > 1e-12)


def test_sweep_mean_line(cfg, tmp_path, capsys):
    assert main(["sweep", "--config", cfg(), "--repeats", "3"]) == EXIT_OK
    r = rows(capsys.readouterr().out)
    assert [x["seed"] for x in r] == ["0", "1", "2", "mean"]


def test_trace_plot_data(cfg, tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--config", cfg(), "--out", str(out)])
    capsys.readouterr()
    assert main(["trace-plot-data", "--trace", str(out / "trace.jsonl")]) == EXIT_OK
    r = rows(capsys.readouterr().out)
    assert r and set(r[0]) == {"t", "agent", "cost", "distance"}
    assert main(["trace-plot-data", "--config", cfg()]) == EXIT_OK
    assert rows(capsys.readouterr().out) == r


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nmode = warp\n")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert "run.mode" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    inst = tmp_path / "inst.txt"
    inst.write_text("garbage\n")
    assert main(["validate", "--instance", str(inst), "--solution", str(bad)]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
