import json
import time

import pytest

from platsim import graph as g
from platsim.cli import main
from platsim.stochastics import RandomSource


def test_run_happy_path(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--arch", "tree", "--alg", "lifo", "--seed", "7", "--preset", "desk", "--out", str(out),
                 "--events"]) == 0
    for name in ("messages.csv", "summary.txt", "summary.json", "events.tsv"):
        assert (out / name).exists()
    assert "architecture: tree" in (out / "summary.txt").read_text()
    assert json.loads((out / "summary.json").read_text())["seed"] == 7


def test_run_rejects_tree_without_groups(tmp_path, capsys):
    code = main(["run", "--arch", "tree", "--alg", "lifo", "--seed", "0", "--n-groups", "0", "--out", str(tmp_path)])
    assert code == 2
    assert "--n-groups" in capsys.readouterr().err


def test_run_is_byte_deterministic(tmp_path):
    args = ["run", "--arch", "layered", "--alg", "hot", "--seed", "3", "--preset", "desk", "--events"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("messages.csv", "events.tsv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_with_config_file(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[defaults]\nsteps = 50\n[complete]\nn_users = 20\n")
    assert main(["run", "--arch", "tiktok", "--alg", "hot", "--seed", "1", "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == 0
    assert "users: 20" in (tmp_path / "o" / "summary.txt").read_text()
    # flags override the file
    assert main(["run", "--arch", "complete", "--alg", "hot", "--seed", "1", "--config", str(cfg),
                 "--n-users", "30", "--out", str(tmp_path / "p")]) == 0
    assert "users: 30" in (tmp_path / "p" / "summary.txt").read_text()


def test_validate(tmp_path, capsys):
    out = tmp_path / "r"
    main(["run", "--arch", "network", "--alg", "hot", "--seed", "0", "--preset", "desk", "--out", str(out)])
    capsys.readouterr()
    assert main(["validate", str(out / "messages.csv"), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["validity"]["reshares_without_reach"] == 0
    assert report["validity"]["likes_exceeding_exposure"] == 0

    lines = (out / "messages.csv").read_text().splitlines()
    cols = lines[0].split(",")
    row = lines[1].split(",")
    row[cols.index("reshares")], row[cols.index("reach")], row[cols.index("exposure")] = "1", "0", "0"
    row[cols.index("likes")] = "0"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join([lines[0], ",".join(row)] + lines[2:]) + "\n")
    assert main(["validate", str(bad), "--json"]) == 1
    assert json.loads(capsys.readouterr().out)["validity"]["reshares_without_reach"] == 1


def test_validate_schema_error(tmp_path, capsys):
    p = tmp_path / "x.csv"
    p.write_text("seed,platform\n0,tree\n")
    assert main(["validate", str(p)]) == 2
    assert "msg_id" in capsys.readouterr().err


def test_sweep_desk_under_a_minute(tmp_path, capsys):
    t0 = time.perf_counter()
    assert main(["sweep", "--preset", "desk", "--seeds", "0", "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 60
    text = capsys.readouterr().out
    assert "hot / lifo ratio" in text and "only one seed" in text


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("g") / "synth.txt"
    g.write_edge_list(g.synth_scale_free(10_000, 3, RandomSource(0)), p)
    return p


def test_sample_graph(tmp_path, synth_file, capsys):
    out = tmp_path / "s.txt"
    assert main(["sample-graph", "--input", str(synth_file), "--target", "1000", "--seed", "5", "--out", str(out)]) == 0
    assert "nodes: 1000" in capsys.readouterr().out
    sample = g.load_edge_list(out)
    assert sample.n_nodes <= 1000
    assert "# nodes: 1000" in out.read_text()
    again = tmp_path / "s2.txt"
    main(["sample-graph", "--input", str(synth_file), "--target", "1000", "--seed", "5", "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_sample_graph_full_size_is_isomorphic(tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("10 20\n20 30\n30 10\n40 10\n")
    out = tmp_path / "out.txt"
    assert main(["sample-graph", "--input", str(src), "--target", "4", "--out", str(out)]) == 0
    edges = sorted(tuple(map(int, ln.split())) for ln in out.read_text().splitlines() if not ln.startswith("#"))
    assert edges == [(10, 20), (20, 30), (30, 10), (40, 10)]


def test_sample_graph_unreachable_target(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("0 1\n")
    assert main(["sample-graph", "--input", str(src), "--target", "5", "--out", str(tmp_path / "o.txt")]) == 2
    assert "exceeds" in capsys.readouterr().err


def test_help_lists_every_subcommand(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    text = capsys.readouterr().out
    for sub in ("run", "sweep", "validate", "sample-graph"):
        assert sub in text
