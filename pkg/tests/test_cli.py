"""End-to-end checks of the command-line interface via subprocesses."""

import json
import subprocess
import sys

CLI = [sys.executable, "-m", "matsec.cli"]


def run_cli(*args, stdin=None):
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, input=stdin, timeout=600
    )


def test_curve_fig1_output():
    res = run_cli("curve", "--matroid", "fig1")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    steps = json.loads(lines[0])["steps"]
    assert steps == [
        {"rank_end": 7, "density_p": 4, "density_q": 1},
        {"rank_end": 9, "density_p": 5, "density_q": 2},
        {"rank_end": 13, "density_p": 9, "density_q": 4},
        {"rank_end": 15, "density_p": 2, "density_q": 1},
        {"rank_end": 19, "density_p": 3, "density_q": 2},
        {"rank_end": 24, "density_p": 6, "density_q": 5},
        {"rank_end": 27, "density_p": 1, "density_q": 1},
    ]
    assert lines[1] == "t,rho"
    assert lines[2] == "0.0,4.0"
    assert lines[3] == "7.0,4.0"
    assert len(lines) == 2 + 2 * 7


def test_curve_requires_a_matroid():
    res = run_cli("curve")
    assert res.returncode == 2
    assert "need --matroid or --graphic" in res.stderr


def test_downshift_pipes_from_curve():
    curve = run_cli("curve", "--matroid", "uniform:140,7").stdout.splitlines()[0]
    res = run_cli("downshift", "--alpha", "2", "--beta", "2", stdin=curve)
    assert res.returncode == 0
    steps = json.loads(res.stdout.splitlines()[0])["steps"]
    # 20 on (0,7] becomes 10 on (0, 7/2]
    assert steps == [{"rank_end": "7/2", "density_p": 10, "density_q": 1}]


def test_run_reports_recompute_to_summary():
    res = run_cli(
        "run", "--matroid", "uniform:25,5", "--trials", "40", "--seed", "11"
    )
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    reports = [json.loads(ln) for ln in lines if ln.startswith("{")]
    assert len(reports) == 40
    assert [r["trial"] for r in reports] == list(range(40))
    mean_alg = sum(r["alg_weight"] for r in reports) / 40
    mean_opt = sum(r["opt_weight"] for r in reports) / 40
    header_at = lines.index("suite,metric,value,ci_lo,ci_hi,n_trials,seed")
    ratio_row = lines[header_at + 1].split(",")
    assert ratio_row[:2] == ["run", "ratio"]
    close = lambda got, want: abs(got - want) <= 1e-12 * max(1.0, abs(want))
    assert close(float(ratio_row[2]), mean_alg / mean_opt)
    alg_row = lines[header_at + 2].split(",")
    assert close(float(alg_row[2]), mean_alg)
    opt_row = lines[header_at + 3].split(",")
    assert close(float(opt_row[2]), mean_opt)


def test_run_is_byte_identical_across_invocations():
    args = ("run", "--matroid", "partition:3/1,6/2", "--trials", "25", "--seed", "7",
            "--arrival", "adversarial-with-sample")
    assert run_cli(*args).stdout == run_cli(*args).stdout


def test_verify_good_sample_suite():
    res = run_cli("verify", "--suite", "good-sample", "--trials", "60", "--seed", "2")
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert lines[0] == "suite,metric,value,ci_lo,ci_hi,n_trials,seed"
    fields = lines[1].split(",")
    assert fields[0] == "good-sample"
    assert float(fields[2]) >= 1 / 3


def test_oracle_diff_agrees():
    res = run_cli("oracle-diff", "--count", "25", "--seed", "3", "--max-n", "8")
    assert res.returncode == 0
    assert res.stdout.strip().endswith("25 comparisons, 0 mismatches")


def test_unknown_arguments_exit_2():
    assert run_cli("run", "--matroid", "uniform:4,2", "--frobnicate").returncode == 2
    assert run_cli("curve", "--matroid", "mystery:9").returncode == 2
