"""End-to-end tests of the command-line interface."""

import math

import pytest

from fblmac.cli import (
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    REGION_HEADER,
    THROUGHPUT_HEADER,
    TRACE_HEADER,
    build_parser,
    main,
)
from fblmac.config import default_config_path

CONFIG_TEXT = """\
[channel]
gain1 = 1.0
gain2 = 1.0
noise_var = 1.0

[power]
budget_db = 10.0

[experiment]
schemes = rsma1 noma1
order = interleaved
blocklengths = 250
radii = 0.8 5.0
angles_deg = 0 45 90

[region]
schemes = noma1
blocklengths = 250
eps_threshold = 1e-3
angle_count = 3
radius_tolerance = 1e-3

[timeshare]
alpha_points = 5
endpoint_points = 5

[sca]
tol = 1e-5
max_iters = 100
beta_step = 0.02

[oracle]
power_points = 7
beta_points = 3
scale = linear
max_evals = 2000000

[output]
directory = results
seed = 7
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(CONFIG_TEXT)
    return str(path)


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_throughput_writes_one_file_per_scheme_and_blocklength(config_path, tmp_path):
    out = tmp_path / "out"
    assert main(["throughput", "--config", config_path, "--out", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["throughput_noma1_250.csv", "throughput_rsma1_250.csv"]
    header, rows = read_rows(out / "throughput_rsma1_250.csv")
    assert header == THROUGHPUT_HEADER
    assert len(rows) == 6
    for row in rows:
        assert row[0] == "rsma1"
        assert row[1] == "interleaved"
        assert row[2] == "250"


def test_throughput_rows_match_the_rate_circle(config_path, tmp_path):
    out = tmp_path / "out"
    main(["throughput", "--config", config_path, "--out", str(out)])
    _, rows = read_rows(out / "throughput_rsma1_250.csv")
    feasible = [r for r in rows if r[-1] == "converged"]
    assert len(feasible) == 3
    r1, r2 = float(feasible[1][3]), float(feasible[1][4])
    assert feasible[1][3] == format(0.8 * math.cos(math.radians(45.0)), ".12g")
    assert r1 == r2
    # converged rows evaluate to T_u = r_u (1 - eps_u)
    for row in feasible:
        t1 = float(row[3]) * (1.0 - float(row[9]))
        assert float(row[11]) == pytest.approx(t1, rel=1e-12, abs=1e-300)


def test_throughput_marks_unreachable_cells_infeasible(config_path, tmp_path):
    out = tmp_path / "out"
    main(["throughput", "--config", config_path, "--out", str(out)])
    _, rows = read_rows(out / "throughput_noma1_250.csv")
    bad = [r for r in rows if r[-1] == "infeasible"]
    assert len(bad) == 3
    for row in bad:
        assert row[5] == ""
        assert row[6] == row[9] == row[13] == "nan"


def test_noma_rows_leave_the_beta_column_empty(config_path, tmp_path):
    out = tmp_path / "out"
    main(["throughput", "--config", config_path, "--out", str(out)])
    _, rows = read_rows(out / "throughput_noma1_250.csv")
    assert all(row[5] == "" for row in rows)
    _, rows = read_rows(out / "throughput_rsma1_250.csv")
    assert all(row[5] != "" for row in rows if row[-1] == "converged")


def test_throughput_reruns_are_byte_identical(config_path, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["throughput", "--config", config_path, "--out", str(out_a)])
    main(["throughput", "--config", config_path, "--out", str(out_b)])
    for path in sorted(out_a.iterdir()):
        assert path.read_bytes() == (out_b / path.name).read_bytes()
        assert b"\r" not in path.read_bytes()


def test_region_traces_the_frontier(config_path, tmp_path):
    out = tmp_path / "out"
    assert main(["region", "--config", config_path, "--out", str(out)]) == EXIT_OK
    header, rows = read_rows(out / "region_noma1_250.csv")
    assert header == REGION_HEADER
    assert [row[3] for row in rows] == ["0", "45", "90"]
    assert float(rows[0][5]) == 0.0
    assert float(rows[2][4]) == 0.0
    assert float(rows[1][4]) == pytest.approx(float(rows[1][5]), rel=1e-12)
    # the frontier lies inside the asymptotic pentagon
    cap = 0.5 * math.log2(11.0)
    assert all(float(r[4]) <= cap and float(r[5]) <= cap for r in rows)


def test_optimize_reports_a_converged_solution(config_path, capsys):
    code = main(["optimize", "0.4", "0.4", "--config", config_path, "--blocklength", "500"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "status: converged" in out
    assert "Tsum=" in out


def test_optimize_scheme_flag_skips_the_split_search(config_path, capsys):
    code = main(["optimize", "0.4", "0.4", "--config", config_path, "--scheme", "noma1"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.startswith("noma1")
    assert "(1 split candidates)" in out
    assert "beta: -" in out


def test_optimize_unreachable_target_exit_code(config_path, capsys):
    code = main(["optimize", "3.0", "3.0", "--config", config_path])
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().out


def test_optimize_writes_a_trace(config_path, tmp_path):
    trace = tmp_path / "trace.csv"
    code = main(
        ["optimize", "0.4", "0.4", "--config", config_path, "--scheme", "noma1",
         "--trace", str(trace)]
    )
    assert code == EXIT_OK
    header, rows = read_rows(trace)
    assert header == TRACE_HEADER
    assert [int(r[0]) for r in rows] == list(range(1, len(rows) + 1))
    for row in rows:
        assert float(row[1]) >= 0.0
        assert float(row[2]) >= 0.0
        assert len(row[3].split()) == len(row[4].split()) == len(row[5].split())


def test_oracle_prints_both_sides_with_the_gap(config_path, capsys):
    code = main(["oracle", "0.4", "0.4", "--config", config_path, "--scheme", "noma1"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "oracle" in out and "sca" in out
    assert "gap:" in out
    assert "evaluations" in out


def test_unknown_config_key_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG_TEXT.replace("gain1 = 1.0", "gain1 = 1.0\nwind = 3"))
    code = main(["throughput", "--config", str(path), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code == EXIT_CONFIG
    assert "bad.ini" in err
    assert "wind" in err


def test_missing_config_file_exit_code(tmp_path, capsys):
    code = main(["throughput", "--config", str(tmp_path / "nope.ini")])
    assert code == EXIT_CONFIG
    assert "nope.ini" in capsys.readouterr().err


def test_parser_defaults_to_the_packaged_config():
    args = build_parser().parse_args(["throughput"])
    assert args.config == str(default_config_path())
    assert args.server is None
    assert args.jobs == 1
