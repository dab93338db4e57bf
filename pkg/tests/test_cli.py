import csv
import subprocess
import sys

import pytest

from fairspread.cli import build_parser, main, parse_args, read_config

TINY = ["--episodes", "2", "--k", "3", "--batch-size", "4", "--embed-dim", "8", "--train-sims", "5",
        "--embed-iters", "2"]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--n", "30", "--count", "3", "--edges-per-node", "2", "--out", str(root / "d"),
                 "--seed", "4"]) == 0
    return root


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_generate_outputs(data, tmp_path):
    d = data / "d"
    manifest = rows(d / "manifest.csv")
    assert len(manifest) == 3 and manifest[0]["edge_file"] == "hba_0000.edges"
    assert main(["generate", "--n", "30", "--count", "3", "--edges-per-node", "2", "--out", str(tmp_path / "e"),
                 "--seed", "4"]) == 0
    for name in ("manifest.csv", "hba_0001.edges", "hba_0002.attr"):
        assert (tmp_path / "e" / name).read_bytes() == (d / name).read_bytes()


def test_generate_count_zero_fails(tmp_path, capsys):
    assert main(["generate", "--count", "0", "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    assert err.startswith("error:") and err.count("\n") == 1


def test_train_then_seeds(data, tmp_path, capsys):
    ck = tmp_path / "net.bin"
    assert main(["train", "--data", str(data / "d"), "--checkpoint", str(ck), "--seed", "2", *TINY]) == 0
    assert len(rows(f"{ck}.csv")) == 2
    capsys.readouterr()
    g = data / "d" / "hba_0000.edges"
    a = data / "d" / "hba_0000.attr"
    assert main(["seeds", "--graph", str(g), "--attributes", str(a), "--method", "dq4fairim",
                 "--checkpoint", str(ck), "--k", "4"]) == 0
    assert len(capsys.readouterr().out.split()) == 4
    out = tmp_path / "s.txt"
    assert main(["seeds", "--graph", str(g), "--attributes", str(a), "--method", "degree", "--k", "30",
                 "--out", str(out)]) == 0
    assert len(out.read_text().split()) == 30


def test_unknown_method_lists_valid(data, tmp_path, capsys):
    code = main(["evaluate", "--data", str(data / "d"), "--methods", "degree,nope", "--out", str(tmp_path / "r")])
    err = capsys.readouterr().err
    assert code != 0 and "valid methods" in err and "fair_pagerank" in err and err.count("\n") == 1


def test_checkpoint_required_before_work(data, tmp_path, capsys):
    code = main(["seeds", "--graph", "missing", "--attributes", "missing", "--method", "dq4fairim"])
    assert code != 0 and "checkpoint" in capsys.readouterr().err


def test_evaluate_deterministic(data, tmp_path):
    args = ["evaluate", "--data", str(data / "d"), "--methods", "degree,celf,pagerank", "--k", "3",
            "--m-eval", "100", "--celf-sims", "20", "--seed", "7", "--timing", "off"]
    assert main([*args, "--out", str(tmp_path / "a.csv")]) == 0
    assert main([*args, "--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "method,dataset,k,p,outreach_mean,outreach_std,fairness_mean,fairness_std,disparity_mean,seconds,seed"


def test_sweep_grid(data, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--data", str(data / "d"), "--methods", "degree", "--sweep", "k", "--values",
                 "2,4,6", "--m-eval", "30", "--out", str(out)]) == 0
    assert [r["k"] for r in rows(out)] == ["2", "4", "6"]
    assert [r["k"] for r in rows(tmp_path / "s.plot.csv")] == ["2", "4", "6"]


def test_ablate(data, tmp_path):
    out = tmp_path / "ab.csv"
    assert main(["ablate", "--data", str(data / "d"), "--phis", "0,1", "--window", "2", "--out", str(out),
                 *TINY]) == 0
    got = rows(out)
    assert {r["phi"] for r in got} == {"0.0", "1.0"} and len(got) == 2


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nk = 7\nm-eval = 20\nmethods = degree, parity\ntiming = off\n")
    args = parse_args(["evaluate", "--config", str(cfg), "--data", "d", "--out", "o", "--k", "3"])
    assert args.k == 3 and args.m_eval == 20 and args.methods == ["degree", "parity"] and args.timing == "off"
    args = parse_args(["evaluate", "--config", str(cfg), "--data", "d", "--out", "o", "--k=4"])
    assert args.k == 4
    assert read_config(cfg)["m_eval"] == "20"
    cfg.write_text("bogus = 1\n")
    assert main(["evaluate", "--config", str(cfg), "--data", "d", "--out", "o"]) != 0


def test_jobs_env_fallback(monkeypatch):
    monkeypatch.setenv("FAIRSPREAD_JOBS", "3")
    assert parse_args(["generate", "--out", "x"]).jobs == 3
    assert parse_args(["generate", "--out", "x", "--jobs", "2"]).jobs == 2


def test_help_documents_defaults(capsys):
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["train", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    for fragment in ("--gamma", "(reference value: 1)", "(reference value: 0.995)", "(reference value: 0.05)",
                     "(reference value: 64)", "(reference value: 2000)", "(reference value: 32)",
                     "(reference value: 0.001)"):
        assert fragment in text
    for sub in ("generate", "seeds", "evaluate", "sweep", "ablate"):
        with pytest.raises(SystemExit):
            parser.parse_args([sub, "--help"])
        assert "--seed" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fairspread", "generate", "--count", "0", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode != 0 and proc.stderr.startswith("error:")
