import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from main import main
from src.cli.commands import (
    EXIT_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_SOLVER,
    STUDY_KINDS,
    cmd_reconstruct,
    cmd_run,
    cmd_study,
    parse_trajectory_frame,
    reconstruct_fields,
)
from src.cli.run_config import Discretization, OutputRequest, RunConfig, build_problem, document_hash, load_document
from src.utils.errors import SchemaError, ValidationError

SMALL_PROBLEM = {
    "p": 1.0,
    "r": {"breakpoints": [0.5], "pieces": [[1.0], [1.5]]},
    "nu": 1.0,
    "T": 0.05,
    "initial": {"h1": {"fourier": {"mean": 0.2, "cos": [0.1]}}},
}


def run_document(**changes):
    document = {
        "problem": SMALL_PROBLEM,
        "discretization": {"N": 4},
        "integrator": {"rel_tol": 1e-6, "abs_tol": 1e-8},
        "outputs": {"times": [0.025]},
    }
    document.update(changes)
    return document


def write_json(path, document):
    with open(path, "w") as f:
        json.dump(document, f)
    return str(path)


def state_csv(path, N, rows):
    columns = ["t"] + [f"{name}[{k}]" for name in ("a1", "a2", "b", "bdot") for k in range(N)]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)
    return str(path)


def test_config_hash_ignores_key_order():
    a = {"problem": SMALL_PROBLEM, "discretization": {"N": 4}}
    b = {"discretization": {"N": 4}, "problem": dict(reversed(list(SMALL_PROBLEM.items())))}
    assert document_hash(a) == document_hash(b)
    assert len(document_hash(a)) == 16
    assert RunConfig.from_document(a).config_hash == document_hash(a)


@pytest.mark.parametrize(
    "document",
    [
        {"discretization": {"N": 4}},
        {"problem": SMALL_PROBLEM, "solver": {}},
        {"problem": SMALL_PROBLEM, "discretization": {"N": 0}},
        {"problem": SMALL_PROBLEM, "discretization": {"N": 4, "q": 1}},
        {"problem": SMALL_PROBLEM, "outputs": {"diagnostics": ["spectra"]}},
        {"problem": SMALL_PROBLEM, "outputs": {"times": [0.5]}},
        {"problem": {"manufactured": "unknown"}},
    ],
)
def test_run_config_rejects(document):
    with pytest.raises(SchemaError):
        RunConfig.from_document(document)


def test_run_config_sections():
    config = RunConfig.from_document(run_document())
    assert config.discretization == Discretization(N=4)
    assert config.outputs.times == (0.025,)
    assert config.integrator.rel_tol == 1e-6
    assert OutputRequest.from_document(None).diagnostics == config.outputs.diagnostics
    manufactured = RunConfig.from_document({"problem": {"manufactured": "heat_like", "T": 0.1}})
    assert manufactured.spec.T == 0.1


def test_run_writes_artifacts(tmp_path):
    config_path = write_json(tmp_path / "run.json", run_document())
    out = tmp_path / "out"
    assert cmd_run(config_path, out=str(out)) == EXIT_OK
    assert sorted(os.listdir(out)) == ["diagnostics.json", "ledger.csv", "report.json", "trajectory.csv"]

    frame = pd.read_csv(out / "trajectory.csv")
    assert frame["t"].iloc[0] == 0.0
    assert frame["t"].iloc[-1] == 0.05
    assert 0.025 in frame["t"].tolist()
    ledger = pd.read_csv(out / "ledger.csv")
    assert len(ledger) == len(frame)

    with open(out / "report.json") as f:
        report = json.load(f)
    assert report["status"] == "ok"
    assert report["config_hash"] == document_hash(run_document())
    assert report["summary"]["N"] == 4
    assert max(abs(x) for x in report["diagnostics"]["eq24_residual"]) <= 1e-5


def test_run_reproduces_from_report(tmp_path):
    config_path = write_json(tmp_path / "run.json", run_document())
    first, second = tmp_path / "first", tmp_path / "second"
    assert cmd_run(config_path, out=str(first)) == EXIT_OK
    assert cmd_run(str(first / "report.json"), out=str(second)) == EXIT_OK
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()


def test_run_default_directory_uses_hash(tmp_path, data_dir):
    document = run_document()
    assert cmd_run(write_json(tmp_path / "run.json", document)) == EXIT_OK
    assert (data_dir / "runs" / document_hash(document) / "trajectory.csv").exists()


def test_invalid_run_writes_nothing(tmp_path):
    bad = run_document(problem=dict(SMALL_PROBLEM, p=0.0))
    out = tmp_path / "out"
    assert cmd_run(write_json(tmp_path / "bad.json", bad), out=str(out)) == EXIT_INVALID
    assert not out.exists()
    assert cmd_run(str(tmp_path / "missing.json")) == EXIT_INVALID
    (tmp_path / "broken.json").write_text("{not json")
    assert cmd_run(str(tmp_path / "broken.json")) == EXIT_INVALID


def test_step_cap_is_a_solver_failure(tmp_path):
    document = run_document(integrator={"max_steps": 2, "dt_init": 1e-4, "dt_max": 1e-3})
    assert cmd_run(write_json(tmp_path / "capped.json", document), out=str(tmp_path / "out")) == EXIT_SOLVER


def test_study_rejects_unknown_kind(tmp_path):
    manifest = write_json(tmp_path / "study.json", {"kind": "sweep", "problem": SMALL_PROBLEM})
    assert cmd_study(manifest) == EXIT_INVALID
    manifest = write_json(tmp_path / "study.json", {"kind": "convergence", "problem": SMALL_PROBLEM, "N": 4})
    assert cmd_study(manifest) == EXIT_INVALID


def test_convergence_study_on_steady_state(tmp_path):
    manifest = {
        "kind": "convergence",
        "problem": {"p": 1.0, "r": 1.0, "nu": 1.0, "T": 0.1, "initial": {"h1": 0.5}},
        "integrator": {"rel_tol": 1e-6, "abs_tol": 1e-8},
        "N_list": [4, 8],
    }
    out = tmp_path / "study"
    assert cmd_study(write_json(tmp_path / "study.json", manifest), out=str(out)) == EXIT_OK
    with open(out / "summary.json") as f:
        summary = json.load(f)
    assert summary["passed"] is True
    assert summary["status"] == "completed"
    assert summary["manifest_hash"] == document_hash(manifest)
    assert set(summary["assertions"]) == {"V2_differences_decreasing", "W11_differences_decreasing"}
    assert len(pd.read_csv(out / "rungs.csv")) == 1


def test_oracle_study_rejects_misaligned_grid(tmp_path):
    manifest = {
        "kind": "oracle",
        "problem": {"p": 1.0, "r": {"breakpoints": [0.3], "pieces": [[1.0], [2.0]]}, "nu": 1.0, "T": 0.1},
        "fd": {"M": 16, "dt": 1e-3},
    }
    assert cmd_study(write_json(tmp_path / "study.json", manifest), out=str(tmp_path / "out")) == EXIT_INVALID


def test_failed_assertion_exits_one(tmp_path):
    manifest = {
        "kind": "oracle",
        "problem": {"p": 1.0, "r": 1.0, "nu": 1.0, "T": 0.1, "initial": {"h1": {"fourier": {"cos": [0.5]}}}},
        "discretization": {"N": 4},
        "integrator": {"rel_tol": 1e-6, "abs_tol": 1e-8},
        "fd": {"M": 16, "dt": 1e-2},
        "tolerance": 0.0,
    }
    out = tmp_path / "study"
    assert cmd_study(write_json(tmp_path / "study.json", manifest), out=str(out)) == EXIT_FAILED
    with open(out / "summary.json") as f:
        summary = json.load(f)
    assert summary["passed"] is False
    assert summary["discrepancy"] > 0.0


def test_reconstruct_single_mode(tmp_path):
    zeros = [0.0] * 12
    first = [0.0] + zeros
    first[2] = 1.0
    second = [1.0] + zeros
    second[2] = 1.0
    path = state_csv(tmp_path / "trajectory.csv", 3, [first, second])
    times, states, N = parse_trajectory_frame(pd.read_csv(path))
    assert N == 3
    frame = reconstruct_fields(times, states, N, [0.0, 0.5], 4)
    at_zero = frame[frame["t"] == 0.0]
    assert np.allclose(at_zero["h1"], [math.sqrt(2.0), 0.0, -math.sqrt(2.0), 0.0], atol=1e-12)
    assert np.allclose(frame["h2"], 0.0)
    assert np.allclose(frame[frame["t"] == 0.5]["h1"], at_zero["h1"].to_numpy(), atol=1e-12)

    assert cmd_reconstruct(path, [0.0], 4) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "fields.csv")) == 4
    with pytest.raises(ValidationError):
        reconstruct_fields(times, states, N, [2.0], 4)
    assert cmd_reconstruct(path, [2.0], 4) == EXIT_INVALID
    assert cmd_reconstruct(path, [0.5], 0) == EXIT_INVALID


@pytest.mark.parametrize(
    "content",
    [
        "z,a1[0]\n0,1\n1,1\n",
        "t,a1[0],a2[0],b[0],bdot[0],extra\n0,1,0,0,0,0\n1,1,0,0,0,0\n",
        "t,a1[0],a2[0],b[0]\n0,1,0,0\n1,1,0,0\n",
        "t,a1[0],a2[0],b[0],bdot[0]\n1,1,0,0,0\n0,1,0,0,0\n",
        "t,a1[0],a2[0],b[0],bdot[0]\n0,x,0,0,0\n1,1,0,0,0\n",
    ],
)
def test_reconstruct_rejects_malformed_csv(tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert cmd_reconstruct(str(path), [0.0], 4) == EXIT_INVALID


def test_main_dispatches_reconstruct(tmp_path):
    row = [0.0] * 13
    row[1] = 0.5
    later = list(row)
    later[0] = 1.0
    path = state_csv(tmp_path / "trajectory.csv", 3, [row, later])
    out = tmp_path / "fields.csv"
    code = main(["reconstruct", "--trajectory", path, "--times", "0.25", "--resolution", "8", "--out", str(out)])
    assert code == EXIT_OK
    assert np.allclose(pd.read_csv(out)["h1"], 0.5)


CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "configs")


@pytest.mark.parametrize("name", sorted(n for n in os.listdir(CONFIG_DIR) if n.endswith(".json")))
def test_shipped_configs_are_valid(name):
    document = load_document(os.path.join(CONFIG_DIR, name))
    if name.startswith("study_"):
        assert document["kind"] in STUDY_KINDS
        if "problem" in document:
            build_problem(document["problem"])
    else:
        RunConfig.from_document(document)
