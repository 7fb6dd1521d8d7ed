"""CLI surface: argument parsing, subcommands, CSV emission, exit codes."""

import numpy as np
import pytest

from dtopk import data
from dtopk.cli import main, parse_count, parse_grid
from dtopk.tuning import CSV_HEADER


def test_parse_count_power_notation():
    assert parse_count("2^24") == 2**24
    assert parse_count("1024") == 1024
    assert parse_count(" 2^4 ") == 16
    assert parse_grid("2^4,32,2^6") == [16, 32, 64]


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.dtkv", tmp_path / "b.dtkv"
    assert main(["gen", "--dist", "ud", "--n", "2^12", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--dist", "ud", "--n", "2^12", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_cd_requires_k(tmp_path, capsys):
    out = tmp_path / "c.dtkv"
    assert main(["gen", "--dist", "cd", "--n", "2^13", "--out", str(out)]) == 2
    assert "requires k" in capsys.readouterr().err
    assert main(["gen", "--dist", "cd", "--n", "2^13", "--k", "16", "--out", str(out)]) == 0


def test_run_verify_passes(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(2**14, 3))
    csv = tmp_path / "run.csv"
    code = main(["run", str(path), "--k", "2^7", "--backend", "radix", "--verify",
                 "--csv", str(csv)])
    assert code == 0
    out = capsys.readouterr().out
    assert "verified=true" in out
    lines = csv.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2


def test_run_generated_input(capsys):
    code = main(["run", "--dist", "nd", "--n", "2^14", "--seed", "2", "--k", "100",
                 "--backend", "bucket", "--verify"])
    assert code == 0
    assert "verified=true" in capsys.readouterr().out


def test_run_rejects_k_zero(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(256, 1))
    assert main(["run", str(path), "--k", "0"]) == 2
    assert "k=0" in capsys.readouterr().err


def test_run_bitonic_surfaces_power_of_two_restriction(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(1024, 1))
    assert main(["run", str(path), "--k", "100", "--backend", "bitonic"]) == 2
    assert "power-of-two" in capsys.readouterr().err


def test_sweep_alpha_csv(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(2**14, 5))
    csv = tmp_path / "sweep.csv"
    code = main(["sweep", str(path), "--k", "2^6", "--param", "alpha",
                 "--grid", "4,5,6", "--csv", str(csv)])
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    alphas = [int(line.split(",")[0]) for line in lines[1:]]
    assert alphas == [4, 5, 6]


def test_sweep_single_point(tmp_path):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(2**12, 5))
    csv = tmp_path / "sweep.csv"
    assert main(["sweep", str(path), "--k", "16", "--param", "beta",
                 "--grid", "2", "--csv", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 2


def test_dist_workers_and_csv(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(2**14, 9))
    csv = tmp_path / "dist.csv"
    code = main(["dist", str(path), "--k", "64", "--workers", "4", "--verify",
                 "--csv", str(csv)])
    assert code == 0
    out = capsys.readouterr().out
    assert "verified=true" in out
    assert f"gathered_bytes={4 * 64 * 4}" in out
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("worker,")
    assert len(lines) == 5


def test_dist_single_worker_matches_run_threshold(tmp_path, capsys):
    path = tmp_path / "v.dtkv"
    data.write_vector(path, data.gen_uniform(2**14, 11))
    main(["run", str(path), "--k", "32"])
    run_out = capsys.readouterr().out
    run_threshold = [l for l in run_out.splitlines() if l.startswith("threshold=")][0]
    main(["dist", str(path), "--k", "32", "--workers", "1"])
    dist_out = capsys.readouterr().out
    assert run_threshold.split("=")[1] in dist_out


def test_missing_input_is_usage_error(capsys):
    assert main(["run", "--k", "4"]) == 2
    assert "input file" in capsys.readouterr().err
