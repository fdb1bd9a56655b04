import csv
import statistics

import pytest

from passorder.cli import REPORT_COLUMNS, main, summarize_report
from passorder.circuit import Circuit, ZZPhase
from passorder.formats import read_circuit, read_dataset, save_checkpoint, write_circuit
from passorder.passes import DO_NOTHING, KAK, PassRegistry
from passorder.policy import PolicyConfig, init_params
from passorder.rl import Checkpoint


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "d.jsonl"
    assert main(["gen", "--out", str(path), "--count", "16", "--max-qubits", "4", "--max-two-qubit", "40",
                 "--seed", "5"]) == 0
    return path


@pytest.fixture
def model(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, Checkpoint(init_params(PolicyConfig(n_layers=2, hidden=16), 1), PassRegistry().names))
    return path


def test_gen_is_reproducible(tmp_path, dataset):
    other = tmp_path / "e.jsonl"
    main(["gen", "--out", str(other), "--count", "16", "--max-qubits", "4", "--max-two-qubit", "40", "--seed", "5"])
    assert dataset.read_bytes() == other.read_bytes()
    assert (tmp_path / "d.jsonl.manifest.json").read_bytes() == (tmp_path / "e.jsonl.manifest.json").read_bytes()
    assert len(read_dataset(dataset)) == 16


def test_eval_report_columns(tmp_path, dataset):
    out = tmp_path / "r.csv"
    assert main(["eval", "--data", str(dataset), "--out", str(out), "--method", "greedy"]) == 0
    rows = list(csv.DictReader(open(out)))
    assert tuple(rows[0].keys()) == REPORT_COLUMNS
    assert len(rows) == 16
    for r in rows:
        n0, n1 = int(r["n0"]), int(r["n_final"])
        assert float(r["cumulative_reward"]) == ((n0 - n1) / n0 if n0 else 0.0)
        assert r["passes_applied"]
        assert float(r["wall_time_ms"]) >= 0


def test_eval_split_and_sequence(tmp_path, dataset):
    out = tmp_path / "r.csv"
    args = ["eval", "--data", str(dataset), "--out", str(out), "--split", "validation", "--sequence", f"{KAK},{KAK}"]
    assert main(args) == 0
    rows = list(csv.DictReader(open(out)))
    n_val = sum(e.metadata["split"] == "validation" for e in read_dataset(dataset))
    assert len(rows) == n_val and all(r["passes_applied"] == f"{KAK};{KAK}" for r in rows)


def test_eval_is_byte_identical(tmp_path, dataset, model):
    outs = []
    for k, threads in enumerate(("1", "1", "2")):
        out = tmp_path / f"r{k}.csv"
        assert main(["eval", "--data", str(dataset), "--out", str(out), "--model", str(model), "--no-timing",
                     "--threads", threads]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_summarize_matches_manual(tmp_path, dataset, capsys):
    out = tmp_path / "r.csv"
    main(["eval", "--data", str(dataset), "--out", str(out), "--method", "beam", "--depth", "2", "--width", "2"])
    rows = list(csv.DictReader(open(out)))
    rewards = [float(r["cumulative_reward"]) for r in rows]
    s = summarize_report(out)
    assert s["all"]["count"] == 16
    assert s["all"]["mean"] == pytest.approx(sum(rewards) / len(rewards), abs=1e-15)
    assert s["all"]["median"] == statistics.median(rewards)
    capsys.readouterr()
    assert main(["summarize", str(out)]) == 0
    assert any(line.startswith("all,16,") for line in capsys.readouterr().out.splitlines())


def test_optimize_trace_and_verify(tmp_path, dataset, model, capsys):
    entry = next(e for e in read_dataset(dataset) if e.circuit.gates)
    src, dst = tmp_path / "c.json", tmp_path / "o.json"
    write_circuit(src, entry.circuit, entry.metadata)
    capsys.readouterr()
    assert main(["optimize", "--model", str(model), "--circuit", str(src), "--out", str(dst), "--trace"]) == 0
    lines = capsys.readouterr().out.splitlines()
    term = next(i for i, line in enumerate(lines) if line.startswith("terminated: "))
    assert term >= 1
    names = PassRegistry().names
    assert all(line.split()[0] in names for line in lines[:term])
    assert lines[term].split(": ")[1] in ("do-nothing", "zero-two-qubit", "no-improvement")
    assert read_circuit(dst)[1] == entry.metadata
    assert main(["verify", str(src), str(dst)]) == 0
    assert "equivalent, distance < 1e-7" in capsys.readouterr().out


def test_verify_failure(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_circuit(a, Circuit(2, (ZZPhase(0, 1, 0.3),)))
    write_circuit(b, Circuit(2, (ZZPhase(0, 1, 0.4),)))
    assert main(["verify", str(a), str(b)]) == 3
    assert "not equivalent" in capsys.readouterr().out


def test_baseline_prints_sequence(tmp_path, capsys):
    a = tmp_path / "a.json"
    write_circuit(a, Circuit(2, (ZZPhase(0, 1, 0.5), ZZPhase(0, 1, 1.5))))
    assert main(["baseline", "--circuit", str(a), "--method", "greedy"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1].startswith("two-qubit gates 2 -> 0 ")


def test_usage_errors(tmp_path, dataset, capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["eval", "--data", str(dataset), "--out", str(tmp_path / "r.csv")]) == 1
    assert main(["eval", "--data", str(dataset), "--out", str(tmp_path / "r.csv"), "--method", "beam"]) == 1
    assert main(["eval", "--data", str(dataset), "--out", str(tmp_path / "r.csv"), "--sequence", "Nope"]) == 1
    assert main(["gen", "--out", str(tmp_path / "x.jsonl"), "--count", "zero"]) == 1
    assert capsys.readouterr().err


def test_data_errors(tmp_path, model):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version":1,"qubits":1,"ops":[{"g":"ZZPhase","q":[0,0],"p":[0.5]}]}')
    assert main(["verify", str(bad), str(bad)]) == 2
    assert main(["verify", str(tmp_path / "missing.json"), str(bad)]) == 2
    other = tmp_path / "other.ckpt"
    registry = PassRegistry([KAK, DO_NOTHING])
    save_checkpoint(other, Checkpoint(init_params(PolicyConfig(n_actions=2, n_layers=1, hidden=8)), registry.names))
    good = tmp_path / "good.json"
    write_circuit(good, Circuit(2, (ZZPhase(0, 1, 0.3),)))
    assert main(["optimize", "--model", str(other), "--circuit", str(good)]) == 2


def test_train_command(tmp_path, dataset):
    ckpt, log = tmp_path / "m.ckpt", tmp_path / "log.csv"
    args = ["train", "--data", str(dataset), "--out", str(ckpt), "--log", str(log), "--max-steps", "32",
            "--n-envs", "2", "--n-steps", "8", "--eval-interval", "1", "--layers", "1", "--hidden", "8", "--seed", "2"]
    assert main(args) == 0
    first = ckpt.read_bytes()
    assert log.read_text().startswith("update,step,mean_episode_reward,validation_reward")
    assert main(args) == 0
    assert ckpt.read_bytes() == first
