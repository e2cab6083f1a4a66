import json
import subprocess
import sys

import numpy as np
import pytest

from rqmkit.spec_io import load_problem, map_to_json, rqm_to_json
from rqmkit.errors import SpecFormatError
from rqmkit.maps import identity_map
from rqmkit.algebra import make_algebra
from rqmkit.rand import random_cp_unital, random_morphism, random_state
from rqmkit.rqm import trivial_rqm


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "rqmkit", *args],
        capture_output=True,
        text=True,
        check=False,
    )


def write_spec(tmp_path, payload, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def identity_images_json():
    m2 = make_algebra([2])
    return map_to_json(identity_map(m2))["images"]


MINIMAL = {
    "objects": {
        "M2": {"type": "algebra", "blocks": [2]},
        "half": {
            "type": "state",
            "algebra": "M2",
            "densities": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]],
        },
    },
    "commands": [{"command": "validate"}],
}


def test_minimal_spec_loads_and_validates(tmp_path):
    path = write_spec(tmp_path, MINIMAL)
    proc = run_cli("validate", path)
    assert proc.returncode == 0, proc.stderr
    assert "validate.state: PASS" in proc.stdout


def test_non_stochastic_kernel_rejected_with_row_index(tmp_path):
    payload = {
        "objects": {"k": {"type": "kernel", "matrix": [[0.5, 0.5], [0.8, 0.8]]}},
        "commands": [],
    }
    path = write_spec(tmp_path, payload)
    proc = run_cli("validate", path)
    assert proc.returncode == 2
    assert "row 1" in proc.stderr


def test_transpose_morphism_rejected_naming_multiplicativity(tmp_path):
    # images of e_pq are e_qp: the transpose map
    images = {}
    for p in range(2):
        for q in range(2):
            mat = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
            mat[q][p] = [1.0, 0.0]
            images[f"0.{p}.{q}"] = [mat]
    payload = {
        "objects": {
            "M2": {"type": "algebra", "blocks": [2]},
            "t": {"type": "morphism", "domain": "M2", "codomain": "M2", "images": images},
        },
        "commands": [],
    }
    path = write_spec(tmp_path, payload)
    proc = run_cli("validate", path)
    assert proc.returncode == 2
    assert "multiplicativity" in proc.stderr


def test_unresolved_reference_is_spec_error(tmp_path):
    payload = {
        "objects": {
            "s": {"type": "state", "algebra": "missing", "densities": []},
        },
        "commands": [],
    }
    path = write_spec(tmp_path, payload)
    proc = run_cli("validate", path)
    assert proc.returncode == 2
    assert "unresolved reference" in proc.stderr


def full_problem(tmp_path):
    m2 = make_algebra([2])
    c2 = make_algebra([1, 1])
    phi = random_morphism(m2, make_algebra([2, 2]), 0)
    nu = random_state(c2, 1)
    cp = random_cp_unital(m2, 2, 2)
    payload = {
        "objects": {
            "M2": {"type": "algebra", "blocks": [2]},
            "C2": {"type": "algebra", "blocks": [1, 1]},
            "T": {"type": "algebra", "blocks": [1]},
            "one": {"type": "state", "algebra": "T", "densities": [[[[1, 0]]]]},
            "half": {
                "type": "state",
                "algebra": "M2",
                "densities": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]],
            },
            "nu": {
                "type": "state",
                "algebra": "C2",
                "densities": [
                    [[[float(nu.densities[0][0, 0].real), 0]]],
                    [[[float(nu.densities[1][0, 0].real), 0]]],
                ],
            },
            "phi": {
                "type": "morphism",
                "domain": "M2",
                "codomain": "C2xM2",
                "images": map_to_json(phi)["images"],
            },
            "F": {
                "type": "cp_map",
                "domain": "M2",
                "codomain": "M2",
                "images": map_to_json(cp)["images"],
            },
            "r": {
                "type": "rqm",
                "target": "M2",
                "params": "C2",
                "morphism": "phi",
                "param_state": "nu",
            },
            "ch": {"type": "chain", "rqm": "r", "initial": "half", "depth": 2},
        },
        "commands": [
            {"command": "induce", "rqm": "r"},
            {"command": "compose", "first": "r", "second": "r"},
            {"command": "implement", "kind": "state", "state": "half"},
            {"command": "chain", "chain": "ch"},
            {"command": "markov", "chain": "ch", "level": 0},
            {"command": "invariant", "rqm": "r"},
            {"command": "skew", "rqm": "r", "state": "half", "depth": 2},
            {"command": "probe-implementability", "map": "F"},
        ],
    }
    # the morphism codomain referenced by name must exist
    payload["objects"] = {
        **{"C2xM2": {"type": "algebra", "blocks": [2, 2]}},
        **payload["objects"],
    }
    payload["objects"]["phi"]["codomain"] = "C2xM2"
    return write_spec(tmp_path, payload)


def test_full_run_and_byte_identical_reports(tmp_path):
    path = full_problem(tmp_path)
    out1 = tmp_path / "report1.json"
    out2 = tmp_path / "report2.json"
    proc1 = run_cli("run", path, "--out", str(out1), "--seed", "7")
    assert proc1.returncode in (0, 1), proc1.stderr
    proc2 = run_cli("run", path, "--out", str(out2), "--seed", "7")
    assert proc2.returncode == proc1.returncode
    assert out1.read_bytes() == out2.read_bytes()
    report = json.loads(out1.read_text())
    assert report["schema_version"] == 1
    assert len(report["results"]) == 8


def test_skew_command_fails_for_non_invariant_state(tmp_path):
    path = full_problem(tmp_path)
    report_path = tmp_path / "skew.json"
    proc = run_cli("skew", path, "--out", str(report_path))
    report = json.loads(report_path.read_text())
    checks = {c["id"]: c for c in report["results"][0]["checks"]}
    # the pullback identity must hold regardless of the state
    assert checks["skew.pullback_identity"]["pass"]
    # exit code mirrors whether the chosen state happened to be invariant
    assert proc.returncode == (0 if checks["skew.invariance"]["pass"] else 1)


def test_invariant_command_emits_canonical_state(tmp_path):
    path = full_problem(tmp_path)
    report_path = tmp_path / "inv.json"
    proc = run_cli("invariant", path, "--out", str(report_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    products = report["results"][0]["products"]
    assert products["fixed_dim"] >= 1
    densities = products["canonical"]["densities"]
    trace = sum(densities[0][i][i][0] for i in range(2))
    assert trace == pytest.approx(1.0, abs=1e-9)


def test_probe_command_reports_witness(tmp_path):
    path = full_problem(tmp_path)
    report_path = tmp_path / "probe.json"
    proc = run_cli("probe-implementability", path, "--out", str(report_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    products = report["results"][0]["products"]
    assert "witness" in products
    assert products["k_dim"] >= 1


def test_classical_command(tmp_path):
    payload = {
        "objects": {
            "k": {"type": "kernel", "matrix": [[0.25, 0.75], [0.5, 0.5]]},
            "m": {
                "type": "random_map",
                "x": 2,
                "y": 2,
                "z": 2,
                "table": [[0, 1], [1, 0]],
                "nu": [0.25, 0.75],
            },
        },
        "commands": [
            {"command": "classical", "kernel": "k"},
            {"command": "classical", "random_map": "m", "steps": 3},
        ],
    }
    path = write_spec(tmp_path, payload)
    proc = run_cli("classical", path)
    assert proc.returncode == 0, proc.stderr
    assert "classical.kernel_roundtrip: PASS" in proc.stdout
    assert "classical.marginals: PASS" in proc.stdout


def test_missing_command_entries_is_spec_error(tmp_path):
    path = write_spec(tmp_path, MINIMAL)
    proc = run_cli("markov", path)
    assert proc.returncode == 2
    assert "declares no" in proc.stderr


def test_load_problem_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SpecFormatError):
        load_problem(str(path))


def test_rqm_serialization_roundtrip_shape():
    r = trivial_rqm(make_algebra([2]))
    data = rqm_to_json(r)
    assert data["target_blocks"] == [2]
    assert data["params_blocks"] == [1]
    assert set(data["phi"]["images"]) == {"0.0.0", "0.0.1", "0.1.0", "0.1.1"}


def constant_transition_spec(tmp_path):
    """The map b -> tr(b)/2 I as a declared RQM, plus a chain started at tr/2."""
    from rqmkit.algebra import make_state as mk
    from rqmkit.maps import make_morphism
    from rqmkit.rqm import implement_composition, implement_morphism, implement_state
    from rqmkit.algebra import trivial_algebra
    from rqmkit.spec_io import state_to_json

    m2 = make_algebra([2])
    unit_arrow = make_morphism(trivial_algebra(), m2, [m2.unit()])
    half = mk(m2, [np.eye(2) / 2])
    rqm = implement_composition(
        implement_morphism(unit_arrow), implement_state(half)
    )
    payload = {
        "objects": {
            "M2": {"type": "algebra", "blocks": [2]},
            "P": {"type": "algebra", "blocks": list(rqm.params.blocks)},
            "nu": {
                "type": "state",
                "algebra": "P",
                "densities": state_to_json(rqm.param_state)["densities"],
            },
            "half": {
                "type": "state",
                "algebra": "M2",
                "densities": [[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]],
            },
            "phi": {
                "type": "morphism",
                "domain": "M2",
                "codomain": "M2xP",
                "images": map_to_json(rqm.phi)["images"],
            },
            "r": {
                "type": "rqm",
                "target": "M2",
                "params": "P",
                "morphism": "phi",
                "param_state": "nu",
            },
            "ch": {"type": "chain", "rqm": "r", "initial": "half", "depth": 3},
        },
        "commands": [
            {"command": "invariant", "rqm": "r"},
            {"command": "stationarity", "chain": "ch", "r_max": 2, "l_max": 1},
        ],
    }
    payload["objects"] = {
        "M2xP": {
            "type": "algebra",
            "blocks": [2 * b for b in rqm.params.blocks],
        },
        **payload["objects"],
    }
    return write_spec(tmp_path, payload, "constant.json")


def test_invariant_command_on_constant_transition(tmp_path):
    path = constant_transition_spec(tmp_path)
    report_path = tmp_path / "const.json"
    proc = run_cli("invariant", path, "--out", str(report_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads(report_path.read_text())
    products = report["results"][0]["products"]
    assert products["fixed_dim"] == 1
    densities = np.array(products["canonical"]["densities"][0])
    canonical = densities[..., 0] + 1j * densities[..., 1]
    assert np.abs(canonical - np.eye(2) / 2).max() <= 1e-9


def test_stationarity_command_on_invariant_seeded_chain(tmp_path):
    path = constant_transition_spec(tmp_path)
    proc = run_cli("stationarity", path)
    assert proc.returncode == 0, proc.stderr
    assert "stationarity.shift_invariance: PASS" in proc.stdout
