import json
import shutil
import subprocess
import sys

import pytest

from hexident.cli import main
from hexident.hexgrid import PeriodLattice
from hexident.lemma_lab import TEMPLATES, save_template
from hexident.optimize import SearchSpec, minimum_code, plant_isolated_pair


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def witness(tmp_path):
    # optimal period-(7,1,1) code, density 3/7
    result = minimum_code(SearchSpec(PeriodLattice(7, 1, 1)))
    path = tmp_path / "w37.txt"
    result.witness.save(path)
    return str(path)


@pytest.fixture
def broken(tmp_path):
    code, _, _ = plant_isolated_pair(PeriodLattice(4, 4, 0), seed=0)
    path = tmp_path / "broken.txt"
    code.save(path)
    return str(path)


# ---------------------------------------------------------------------------
# verify and density


def test_verify_ok(capsys, witness):
    code, out, _ = run(capsys, "verify", "--code", witness)
    assert code == 0
    assert out.strip() == "OK density=3/7"


def test_verify_reports_violations(capsys, broken):
    code, out, _ = run(capsys, "verify", "--code", broken)
    assert code == 1
    assert "IndistinguishablePair" in out
    assert "FAIL" in out


def test_verify_json(capsys, witness):
    code, out, _ = run(capsys, "verify", "--code", witness, "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["density"] == "3/7"
    assert payload["violations"] == []


def test_density_exact_and_approx(capsys, witness):
    code, out, _ = run(capsys, "density", "--code", witness)
    assert (code, out.strip()) == (0, "3/7")
    code, out, _ = run(capsys, "density", "--code", witness, "--approx")
    assert code == 0
    assert out.strip() == str(float(3 / 7))


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(capsys, "verify", "--code", "/no/such/code.txt")
    assert code == 2
    assert err


# ---------------------------------------------------------------------------
# classify, discharge, outflow, shell


def test_classify_json(capsys, witness):
    code, out, _ = run(capsys, "classify", "--code", witness)
    assert code == 0
    payload = json.loads(out)
    assert payload["density"] == "3/7"
    assert all("size" in c for c in payload["clusters"])


def test_discharge_main_passes(capsys, witness):
    code, out, _ = run(capsys, "discharge", "--engine", "main", "--code", witness,
                       "--bound", "12/29")
    assert code == 0
    payload = json.loads(out)
    assert payload["audit"]["failures"] == []
    assert payload["ledger"]["conserved"] is True
    assert payload["claims"]["ok"] is True


def test_discharge_prop1_passes(capsys, witness):
    code, out, _ = run(capsys, "discharge", "--engine", "prop1", "--code", witness,
                       "--format", "text")
    assert code == 0
    assert out.startswith("PASS engine=prop1 bound=2/5")


def test_discharge_fails_above_reachable_bound(capsys, witness):
    code, out, _ = run(capsys, "discharge", "--engine", "main", "--code", witness,
                       "--bound", "1/2", "--format", "text")
    assert code == 1
    assert out.startswith("FAIL")


def test_discharge_rejects_broken_code(capsys, broken):
    code, _, err = run(capsys, "discharge", "--code", broken)
    assert code == 1
    assert "invalid code" in err


def test_bad_bound_is_usage_error(capsys, witness):
    code, _, _ = run(capsys, "discharge", "--code", witness, "--bound", "twelve")
    assert code == 2


def test_outflow_value(capsys, witness):
    code, out, _ = run(capsys, "outflow", "--code", witness, "--at", "0,0,0")
    assert code == 0
    assert out.strip() == "48/29"


def test_outflow_requires_code_vertex(capsys, witness):
    code, _, err = run(capsys, "outflow", "--code", witness, "--at", "0,0,1")
    assert code == 2
    assert "not a code vertex" in err


def test_shell_bound_line(capsys, witness):
    code, out, _ = run(capsys, "shell", "--code", witness, "--at", "0,0,0")
    assert code == 0
    assert out.strip() == "shell=20 minParts=11"


def test_bad_vertex_is_usage_error(capsys, witness):
    code, _, _ = run(capsys, "outflow", "--code", witness, "--at", "zero")
    assert code == 2


# ---------------------------------------------------------------------------
# check-lemma


def test_check_lemma_verified(capsys):
    code, out, _ = run(capsys, "check-lemma", "--id", "L1", "--template", "fig3a")
    assert code == 0
    assert out.strip() == "VERIFIED"


def test_check_lemma_node_cap_inconclusive(capsys):
    code, out, _ = run(capsys, "check-lemma", "--id", "L2", "--node-cap", "40")
    assert code == 1
    assert out.splitlines()[0] == "INCONCLUSIVE"
    assert "node cap" in out


def test_check_lemma_json(capsys):
    code, out, _ = run(capsys, "check-lemma", "--id", "L1", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["lemmaId"] == "L1"
    assert payload["result"] == "VERIFIED"


def test_check_lemma_template_file(capsys, tmp_path):
    path = tmp_path / "window.txt"
    save_template(TEMPLATES["fig3a"], path)
    code, out, _ = run(capsys, "check-lemma", "--id", "L1", "--template", str(path))
    assert code == 0
    assert out.strip() == "VERIFIED"


def test_check_lemma_radius_and_template_conflict(capsys):
    code, _, err = run(capsys, "check-lemma", "--id", "L1", "--template", "fig3a",
                       "--radius", "3")
    assert code == 2
    assert err


# ---------------------------------------------------------------------------
# search and scan


def test_search_finds_optimum(capsys):
    code, out, _ = run(capsys, "search", "--p", "7", "--q", "1", "--shear", "1")
    assert code == 0
    assert out.splitlines()[0].startswith("minSize=6 density=3/7 optimal=True")
    assert "period 7 1 1" in out


def test_search_witness_roundtrip_through_verify(capsys, tmp_path):
    out_path = tmp_path / "witness.txt"
    code, _, _ = run(capsys, "search", "--p", "2", "--q", "3", "--shear", "1",
                     "--witness-out", str(out_path))
    assert code == 0
    code, out, _ = run(capsys, "verify", "--code", str(out_path))
    assert code == 0
    assert out.startswith("OK")


def test_search_infeasible_budget(capsys):
    code, out, _ = run(capsys, "search", "--p", "2", "--q", "2", "--budget", "2")
    assert code == 1
    assert "INFEASIBLE" in out


def test_search_json(capsys):
    code, out, _ = run(capsys, "search", "--p", "1", "--q", "1", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["minSize"] == 1
    assert payload["density"] == "1/2"
    assert payload["optimal"] is True


def test_search_rejects_bad_shear(capsys):
    code, _, err = run(capsys, "search", "--p", "2", "--q", "2", "--shear", "5")
    assert code == 2
    assert err


def test_scan_csv_and_filter(capsys):
    code, out, _ = run(capsys, "scan", "--max-domain", "8")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "p,q,shear,minSize,density,nodesExplored,optimal"
    assert len(lines) > 1
    code, out, _ = run(capsys, "scan", "--max-domain", "8", "--sizes", "2")
    assert code == 0
    assert out.strip().splitlines()[1:] == ["1,1,0,1,1/2,2,True"]


def test_output_flag_writes_file(capsys, tmp_path, witness):
    target = tmp_path / "report.txt"
    code, out, _ = run(capsys, "density", "--code", witness, "--output", str(target))
    assert code == 0
    assert out == ""
    assert target.read_text() == "3/7\n"


def test_reports_are_deterministic(capsys, witness):
    first = run(capsys, "discharge", "--code", witness)
    second = run(capsys, "discharge", "--code", witness)
    assert first == second


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_threads_flag_accepted(capsys, witness):
    code, out, _ = run(capsys, "--threads", "4", "density", "--code", witness)
    assert (code, out.strip()) == (0, "3/7")


def test_console_entry_point(witness):
    exe = shutil.which("hexident")
    cmd = [exe] if exe else [sys.executable, "-m", "hexident.cli"]
    proc = subprocess.run(cmd + ["verify", "--code", witness],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "OK density=3/7"
