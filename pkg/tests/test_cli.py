import csv
import io
import json

import pytest

from robin_stability import cli
from robin_stability.cli import run, shipped_corpus
from robin_stability.geometry import disk, format_domain, load_domain, make_star_domain


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def dom_file(tmp_path):
    p = tmp_path / "petal.txt"
    p.write_text(format_domain(make_star_domain(1, 0.08, {4: 1}, True)))
    return p


@pytest.fixture
def disk_file(tmp_path):
    p = tmp_path / "round.txt"
    p.write_text(format_domain(disk(1.0)))
    return p


def test_ball_eig_alpha_minus_one(capsys):
    assert run(["ball-eig", "--n", "2", "--R", "1", "--alpha", "-1"]) == 0
    out, err = capsys.readouterr()
    (row,) = rows(out)
    assert float(row["lambda2"]) == 0.0
    assert "lambda2 = 0" in err


def test_ball_eig_list_and_out_of_range(capsys):
    assert run(["ball-eig", "--alpha", "-0.5,-0.2"]) == 0
    assert len(rows(capsys.readouterr().out)) == 2
    assert run(["ball-eig", "--alpha", "-1.2"]) == 2


def test_constants_digits(capsys):
    assert run(["constants", "--alpha", "-0.5"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert float(row["gamma"]) == pytest.approx(0.023075944335992107, rel=1e-11)
    assert len(row["gamma"].split("e")[0].replace(".", "")) >= 10


def test_verify_nonsense_file(tmp_path, capsys):
    bad = tmp_path / "nonsense.txt"
    bad.write_text("this is not a domain\n")
    assert run(["verify", "--domain", str(bad)]) == 2
    assert "expected 'key = value'" in capsys.readouterr().err


def test_verify_missing_file(tmp_path, capsys):
    assert run(["verify", "--domain", str(tmp_path / "nope.txt"), "--alpha", "-0.5"]) == 2


def test_verify_pass(dom_file, disk_file, capsys):
    assert run(["verify", "--domain", str(dom_file), "--domain", str(disk_file), "--alpha", "-0.5", "--h", "0.1"]) == 0
    out = rows(capsys.readouterr().out)
    assert [r["domain_id"] for r in out] == ["petal", "disk"]  # name key wins over the file stem
    assert all(r["pass"] == "true" for r in out)


def test_verify_failure_exit_one(dom_file, monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_corpus", _failing_corpus)
    assert run(["verify", "--domain", str(dom_file), "--alpha", "-0.5", "--h", "0.1"]) == 1


def _failing_corpus(paths, alphas, h, settings):
    from dataclasses import replace

    from robin_stability.experiments import run_corpus

    rep = run_corpus(paths, alphas, h, settings)
    r = rep.rows[0]
    rep.rows[0] = replace(r, report=replace(r.report, margin=-1.0))
    return rep


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--bogus"],
        [],
        ["frobnicate"],
        ["verify"],  # neither --domain nor --corpus
        ["verify", "--corpus", "--alpha", "0.3"],
        ["verify", "--corpus", "--h", "-1"],
        ["sharpness", "--eps", "-0.1,0.2"],
        ["sharpness", "--alpha", "-0.5,-0.2"],
        ["sharpness", "--mode", "x"],
        ["mesh-dump", "--h", "0.1"],
        ["ball-eig", "--n", "1"],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_help_exit_zero(capsys):
    assert run(["--help"]) == 0
    assert "Precedence" in capsys.readouterr().out


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": [-0.3], "R": 2.0}))
    assert run(["ball-eig", "--config", str(cfg)]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert float(row["alpha"]) == -0.3 and float(row["R"]) == 2.0
    assert run(["ball-eig", "--config", str(cfg), "--alpha", "-0.1"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert float(row["alpha"]) == -0.1 and float(row["R"]) == 2.0


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["ball-eig", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "red"}))
    assert run(["ball-eig", "--config", str(unknown)]) == 2
    assert run(["ball-eig", "--config", str(tmp_path / "missing.json")]) == 2


def test_sharpness_csv_plot_and_reproducible(tmp_path, capsys):
    svg = tmp_path / "s.svg"
    out_csv = tmp_path / "s.csv"
    argv = ["sharpness", "--mode", "4", "--alpha", "-0.5", "--eps", "0.05,0.1", "--h", "0.05", "--plot", str(svg)]
    assert run(argv + ["--csv", str(out_csv)]) == 0
    first = out_csv.read_text()
    assert len(rows(first)) == 2
    assert svg.read_text().startswith("<svg") and "<path" in svg.read_text()
    assert run(argv + ["--csv", str(out_csv)]) == 0
    assert out_csv.read_text() == first
    assert "fitted slope" in capsys.readouterr().err


def test_sharpness_slope_check(monkeypatch, capsys):
    monkeypatch.setattr(cli, "SLOPE_RANGE", (3.0, 4.0))
    assert run(["sharpness", "--eps", "0.05,0.1", "--h", "0.05"]) == 1


def test_neumann_limit_and_mesh_dump(disk_file, tmp_path, capsys):
    assert run(["neumann-limit", "--domain", str(disk_file), "--h", "0.1"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0]["pass"] == "true" and len(out) == 5
    mesh = tmp_path / "m.txt"
    assert run(["mesh-dump", "--domain", str(disk_file), "--h", "0.1", "--out", str(mesh)]) == 0
    assert "boundary_edges" in mesh.read_text()


def test_shipped_corpus_files():
    files = shipped_corpus()
    assert len(files) == 10
    doms = [load_domain(f) for f in files]
    modes = {m for d in doms for m, _ in d.cosine_coeffs + d.sine_coeffs}
    assert min(modes) == 4 and max(modes) == 8
    assert all(d.eps <= 0.15 for d in doms)
