import json
from pathlib import Path

import numpy as np
import pytest

from iadl.cli import main
from iadl.io import (
    ExperimentConfig,
    MatrixFileError,
    load_config,
    load_matrix,
    read_manifest,
    save_matrix,
    sha256_file,
    verify_manifest,
    write_manifest,
)

MINI_CONFIG = """
seed: 7
k: 8
sparsity:
  theta: [95, 94]
c_delta: auto
dataset:
  recipe: mini
  snr_db: 0.0
  hrf_spread: 0.3
solver:
  max_iters: 12
  rel_obj_tol: 0.0
init:
  refine_iters: 3
"""


@pytest.fixture
def mini_config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(MINI_CONFIG)
    return path


# -- matrix files -----------------------------------------------------------------


def test_binary_round_trip_exact(tmp_path, rng):
    m = rng.standard_normal((7, 5))
    path = tmp_path / "m.iadl"
    save_matrix(m, path)
    back = load_matrix(path)
    np.testing.assert_array_equal(back, m)


def test_csv_round_trip(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(load_matrix(path), [[1.0, 2.0], [3.0, 4.0]])
    save_matrix(np.array([[np.pi, 1e-17], [3.0, 4.0]]), path)
    np.testing.assert_array_equal(load_matrix(path), [[np.pi, 1e-17], [3.0, 4.0]])


def test_truncated_payload_rejected(tmp_path, rng):
    path = tmp_path / "m.iadl"
    save_matrix(rng.standard_normal((4, 4)), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(MatrixFileError, match="truncated payload"):
        load_matrix(path)


def test_bad_magic_rejected(tmp_path, rng):
    path = tmp_path / "m.iadl"
    save_matrix(rng.standard_normal((2, 2)), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(MatrixFileError, match="bad magic"):
        load_matrix(path)


def test_trailing_bytes_rejected(tmp_path, rng):
    path = tmp_path / "m.iadl"
    save_matrix(rng.standard_normal((2, 2)), path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(MatrixFileError, match="trailing"):
        load_matrix(path)


def test_non_finite_values_rejected(tmp_path):
    with pytest.raises(MatrixFileError):
        save_matrix(np.array([[1.0, np.nan]]), tmp_path / "m.iadl")


# -- manifests ---------------------------------------------------------------------


def test_manifest_round_trip_and_tamper_detection(tmp_path, rng):
    save_matrix(rng.standard_normal((3, 3)), tmp_path / "a.iadl")
    write_manifest(tmp_path, ["a.iadl"], extra={"note": "test"})
    verify_manifest(tmp_path)
    assert read_manifest(tmp_path)["note"] == "test"
    save_matrix(rng.standard_normal((3, 3)), tmp_path / "a.iadl")
    with pytest.raises(ValueError, match="checksum"):
        verify_manifest(tmp_path)


# -- config ------------------------------------------------------------------------


def test_config_loads_and_expands_theta_ladder(mini_config_path):
    config = load_config(mini_config_path)
    assert config.k == 8
    thetas = config.resolve_thetas()
    assert thetas.size == 8
    np.testing.assert_allclose(thetas[:2], [95.0, 94.0])
    np.testing.assert_allclose(thetas[-3:], [70.0, 10.0, 0.0])
    # the ladder between runs from 99 down to 80
    assert thetas[2] == pytest.approx(99.0)
    assert thetas[4] == pytest.approx(80.0)
    phis = config.resolve_phis(1600)
    np.testing.assert_allclose(phis[:2], [80.0, 96.0])


def test_config_rejects_theta_and_phi_together(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("k: 3\nsparsity:\n  theta: [95]\n  phi: [10, 10, 10]\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_config_requires_some_sparsity(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("k: 3\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_config_rejects_unknown_recipe(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("k: 3\nsparsity:\n  theta: [95, 95, 95]\ndataset:\n  recipe: huge\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_config_phi_path(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("k: 2\nsparsity:\n  phi: [12, 30]\n")
    config = load_config(path)
    np.testing.assert_allclose(config.resolve_phis(100), [12.0, 30.0])


# -- CLI pipeline -------------------------------------------------------------------


def test_cli_atlas_sparsity(capsys):
    assert main(["atlas-sparsity", "95", "95"]) == 0
    assert capsys.readouterr().out.strip() == "90"


def test_cli_tune_cdelta_deterministic(mini_config_path, capsys):
    assert main(["tune-cdelta", "--config", str(mini_config_path)]) == 0
    first = capsys.readouterr().out.strip()
    assert main(["tune-cdelta", "--config", str(mini_config_path)]) == 0
    second = capsys.readouterr().out.strip()
    assert first == second
    assert float(first) > 0


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    code = main(["tune-cdelta", "--config", str(tmp_path / "missing.yaml")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cli_full_pipeline(tmp_path, mini_config_path, capsys):
    data = tmp_path / "data"
    fit = tmp_path / "fit"
    init_dir = tmp_path / "init"
    metrics = tmp_path / "metrics.json"

    assert main(["simulate", "--config", str(mini_config_path), "--out", str(data)]) == 0
    for name in ("x.iadl", "true_courses.iadl", "true_maps.iadl",
                 "task_courses.iadl", "meta.json", "manifest.json"):
        assert (data / name).exists()
    delta = load_matrix(data / "task_courses.iadl")
    assert delta.shape == (150, 2)

    assert main(["init", "--config", str(mini_config_path), "--data", str(data),
                 "--out", str(init_dir)]) == 0
    assert (init_dir / "init_dict.iadl").exists()

    assert main(["fit", "--config", str(mini_config_path), "--data", str(data),
                 "--out", str(fit), "--init-dir", str(init_dir)]) == 0
    resolved = json.loads((fit / "resolved.json").read_text())
    assert resolved["assisted_count"] == 2
    assert resolved["c_delta"] > 0
    trace_lines = (fit / "trace.csv").read_text().strip().splitlines()
    assert trace_lines[0] == "iteration,objective,max_violation"
    objectives = [float(line.split(",")[1]) for line in trace_lines[1:]]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(objectives, objectives[1:]))

    assert main(["evaluate", "--truth", str(data), "--fit", str(fit),
                 "--out", str(metrics)]) == 0
    doc = json.loads(metrics.read_text())
    assert set(doc) == {"full_source", "time_course"}
    assert len(doc["full_source"]["r_full"]) == 8
    assert metrics.with_suffix(".csv").exists()
    out = capsys.readouterr().out
    assert "mean r (full source)" in out


def test_cli_blind_fit_and_checksum_refusal(tmp_path, mini_config_path, capsys):
    data = tmp_path / "data"
    data2 = tmp_path / "data2"
    fit = tmp_path / "fit"

    assert main(["simulate", "--config", str(mini_config_path), "--out", str(data)]) == 0
    assert main(["simulate", "--config", str(mini_config_path), "--seed", "99",
                 "--out", str(data2)]) == 0
    assert main(["fit", "--config", str(mini_config_path), "--data", str(data),
                 "--out", str(fit), "--blind"]) == 0
    resolved = json.loads((fit / "resolved.json").read_text())
    assert resolved["assisted_count"] == 0 and resolved["blind"] is True

    # evaluating against the wrong truth bundle must be refused
    code = main(["evaluate", "--truth", str(data2), "--fit", str(fit),
                 "--out", str(tmp_path / "m.json")])
    assert code == 1
    assert "different data" in capsys.readouterr().err


def test_cli_simulate_deterministic(tmp_path, mini_config_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["simulate", "--config", str(mini_config_path), "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(mini_config_path), "--out", str(b)]) == 0
    assert sha256_file(a / "x.iadl") == sha256_file(b / "x.iadl")
