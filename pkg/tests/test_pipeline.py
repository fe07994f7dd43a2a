import importlib.util
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from conftest import REF_F1, REF_PHASES, REF_RADII, point_cloud, random_conductivities
from services.boundary_quadrature import null_lagrangians
from services.config import load_run_config
from services.forward_fields import boundary_trace, coreshell_solution, laminate_moments
from services.measurement import PhaseConductivities, measurement_to_doc
from services.pipeline import compute_bounds, fmt_elapsed, run_sweep, sweep_radius
from services.report import read_csv, sweep_frame, write_sweep
from voltbound import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FAST = ["--quadrature-n", "256", "--grid-n", "201"]


def _write_config(path: Path, **extra) -> Path:
    doc = {
        "sigma1": [3.0, 8.0],
        "sigma2": [8.0, 6.0],
        "radii": list(REF_RADII),
        "layer_phase": list(REF_PHASES),
        "affine_u": [[-2.0, 1.0], [0.6, -1.4]],
        **extra,
    }
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _load(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.mark.parametrize("seconds, expected", [(0, "00:00"), (59.4, "00:59"), (61, "01:01"), (3600, "60:00")])
def test_fmt_elapsed(seconds, expected):
    assert fmt_elapsed(seconds) == expected


def test_forward_then_bounds_matches_pipeline(tmp_path):
    cfg = _write_config(tmp_path / "anel.json")
    assert main(["forward", "--config", str(cfg), "--out", str(tmp_path / "fw"), *FAST]) == 0
    trace = tmp_path / "fw" / "trace.json"
    assert trace.is_file()
    assert main(["bounds", "--config", str(cfg), "--trace-file", str(trace),
                 "--out", str(tmp_path / "bd"), *FAST]) == 0
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "pl"), *FAST]) == 0

    split = _load(tmp_path / "bd" / "report.json")
    joint = _load(tmp_path / "pl" / "report.json")
    for key, value in joint["bounds"].items():
        assert split["bounds"][key] == pytest.approx(value, abs=1e-12)
    for name in ("A", "A_tilde"):
        np.testing.assert_allclose(split["admissible_sets"][name]["intervals"],
                                   joint["admissible_sets"][name]["intervals"], atol=1e-12)
    assert joint["diagnostics"]["f1_true"] == pytest.approx(REF_F1)
    assert joint["diagnostics"]["f1_in_A"] and joint["diagnostics"]["f1_in_A_tilde"]
    assert joint["diagnostics"]["transmission_residual"] < 1e-10


def test_pipeline_writes_curves(tmp_path):
    cfg = _write_config(tmp_path / "anel.json")
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(cfg), "--out", str(out), "--emit-curves", "--curve-n", "41", *FAST]) == 0
    curves = out / "curves"
    for name in ("rectangle.csv", "delta.csv", "ptilde_max.csv", "delta_tilde.csv", "ellipses.csv"):
        assert (curves / name).is_file()
    delta = read_csv(curves / "delta.csv")
    assert len(delta) == 41
    assert delta["admissible"].astype(str).str.lower().eq("true").all()
    ellipses = read_csv(curves / "ellipses.csv")
    assert set(ellipses["phase"]) == {1, 2}


def test_missing_config_exits_with_config_code(tmp_path):
    assert main(["pipeline", "--config", str(tmp_path / "nao_existe.json")]) == 1


def test_bounds_mode_needs_exactly_one_input(tmp_path):
    assert main(["bounds", "--out", str(tmp_path)]) == 1


def test_beta_zero_writes_partial_report(rng, tmp_path):
    pc = point_cloud(rng, cond=PhaseConductivities(1 + 2j, 3 + 6j))
    meas_file = tmp_path / "medicao.json"
    meas_file.write_text(json.dumps(measurement_to_doc(pc.cond, pc.meas)), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["bounds", "--measurement-file", str(meas_file), "--out", str(out)]) == 2
    doc = _load(out / "report.json")
    assert doc["degeneracy"]["beta_zero"] is True
    assert doc["bounds"] is None


def test_laminate_forward_writes_measurement(tmp_path):
    out = tmp_path / "lam"
    assert main(["forward", "--config", str(CONFIGS / "laminate.json"), "--out", str(out)]) == 0
    meas_file = out / "measurement.json"
    assert meas_file.is_file()
    assert main(["bounds", "--measurement-file", str(meas_file), "--out", str(out), "--grid-n", "51"]) == 0
    doc = _load(out / "report.json")
    for key in ("f_el", "f_eu", "f_tilde_el", "f_tilde_eu"):
        assert doc["bounds"][key] == pytest.approx(0.35, abs=1e-9)


def test_laminate_bounds_collapse_to_true_fraction(rng):
    for _ in range(10):
        cond = random_conductivities(rng)
        f1 = float(rng.uniform(0.05, 0.95))
        field = rng.normal(size=2) + 1j * rng.normal(size=2)
        angle = rng.uniform(0, 2 * np.pi)
        moments = laminate_moments(f1, cond, field, (np.cos(angle), np.sin(angle)))
        _, report = compute_bounds(cond, moments.to_measurement(), 51, 1e-12)
        for value in (report.f_el, report.f_tilde_el, report.f_tilde_eu, report.f_eu):
            assert value == pytest.approx(f1, abs=1e-9)


@pytest.mark.parametrize("k", [0.0, 0.3, 1.0])
def test_coreshell_attains_improved_lower_bound(k):
    cond = PhaseConductivities(3 + 8j, 8 + 6j)
    sol = coreshell_solution(1.0, 2.0, cond, k)
    meas = null_lagrangians(boundary_trace(sol, 2048))
    _, report = compute_bounds(cond, meas, 401, 1e-10, f1_true=0.25)
    assert report.f_el == pytest.approx(0.25 / (1 + 2 * k * k), abs=1e-8)
    assert report.f_tilde_el == pytest.approx(0.25, abs=1e-7)
    if k == 0.0:
        assert report.f_el == pytest.approx(0.25, abs=1e-10)


def test_sweep_radius_hits_target_fraction():
    for f1 in (0.01, 0.5, 0.99):
        r2 = sweep_radius(0.45, 5.0, f1)
        assert 0.45 < r2 < 5.0
        assert (0.45 ** 2 + 5.0 ** 2 - r2 ** 2) / 5.0 ** 2 == pytest.approx(f1)


def test_sweep_frame_and_parquet(tmp_path):
    rows = [
        {"pair": "a", "f1": 0.5, "f_el": 0.4, "f_eu": 0.6, "status": "ok", "error": ""},
        {"pair": "a", "f1": 0.6, "status": "EmptySet", "error": "vazio"},
    ]
    df = sweep_frame(rows)
    assert df.loc[0, "f_el_norm"] == pytest.approx(0.8)
    assert np.isnan(df.loc[1, "f_el_norm"])
    csv_path, parquet_path = write_sweep(df, tmp_path)
    back = pd.read_parquet(parquet_path)
    assert list(back["status"]) == ["ok", "EmptySet"]
    assert len(read_csv(csv_path)) == 2


@pytest.mark.slow
def test_layered_annulus_sweep(tmp_path):
    cfg = load_run_config("sweep", CONFIGS / "sweep_camadas.json",
                          {"quadrature_n": 256, "grid_n": 401, "out_dir": str(tmp_path)})
    result = run_sweep(cfg, log=lambda msg: None)
    df = result.frame
    assert result.exit_code == 0
    assert len(df) == 4 * 99
    assert (df["status"] == "ok").all()
    tol = 1e-8
    assert (df["f_el"] <= df["f_tilde_el"] + tol).all()
    assert (df["f_tilde_el"] <= df["f1"] + tol).all()
    assert (df["f1"] <= df["f_tilde_eu"] + tol).all()
    assert (df["f_tilde_eu"] <= df["f_eu"] + tol).all()
    for key in ("A", "A_tilde"):
        assert (df[f"inf_{key}"] <= df["f1"] + tol).all()
        assert (df["f1"] <= df[f"sup_{key}"] + tol).all()


def _audit_module():
    spec = importlib.util.spec_from_file_location("consulta_sweep", Path(__file__).resolve().parents[1] / "consultas" / "consulta_sweep.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_sweep_audit_flags_out_of_order_rows(tmp_path):
    good = {"pair": "a", "f1": 0.5, "f_el": 0.45, "f_tilde_el": 0.48, "f_tilde_eu": 0.52, "f_eu": 0.55,
            "inf_A": 0.45, "sup_A": 0.55, "inf_A_tilde": 0.48, "sup_A_tilde": 0.52, "status": "ok", "error": ""}
    bad = {**good, "pair": "b", "f_tilde_el": 0.51}
    _, parquet_path = write_sweep(sweep_frame([good]), tmp_path / "ok")
    audit = _audit_module()
    out_csv = tmp_path / "auditoria.csv"
    assert audit.main(["--parquet", str(parquet_path), "--out", str(out_csv)]) == 0
    assert read_csv(out_csv).loc[0, "violacoes_ordem"] == 0

    _, parquet_path = write_sweep(sweep_frame([good, bad]), tmp_path / "ruim")
    assert audit.main(["--parquet", str(parquet_path)]) == 1


@pytest.mark.parametrize("workers", [1, 2])
def test_sweep_records_failed_rows(tmp_path, workers):
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps({
        "sweep": {
            "R1": 0.45, "R3": 5.0, "f_values": [0.3, 0.5, 0.7],
            "pairs": [
                {"name": "ok", "sigma1": [2.0, 0.5], "sigma2": [1.0, 0.0]},
                {"name": "real", "sigma1": [2.0, 0.0], "sigma2": [1.0, 0.0]},
            ],
        },
    }), encoding="utf-8")
    cfg = load_run_config("sweep", cfg_path, {"quadrature_n": 64, "grid_n": 51,
                                              "out_dir": str(tmp_path / "out"), "workers": workers})
    messages = []
    result = run_sweep(cfg, log=messages.append)
    df = result.frame
    # σ reais nas duas fases: β = 0
    assert result.exit_code == 2
    assert list(df["status"]) == ["ok"] * 3 + ["BetaZero"] * 3
    assert df.loc[df["pair"] == "real", "error"].str.len().gt(0).all()
    assert df.loc[df["pair"] == "ok", "f_el"].notna().all()
    assert any(m.startswith("[AVISO] Sweep concluído com 3 falha(s)") for m in messages)
    assert not any(m.startswith("[OK] Sweep") for m in messages)
    assert (tmp_path / "out" / "sweep.parquet").is_file()
