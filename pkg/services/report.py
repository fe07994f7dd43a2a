# report.py
# Formatos de saída:
#   - report.json  (inputs, constants, bounds, admissible_sets, degeneracy, diagnostics)
#   - curvas CSV   (retângulo, Δ_f, p̃max, Δ̃_f, fronteiras das elipses)
#   - sweep        (CSV + Parquet ZSTD)
# CSV segue o padrão das exportações: separador ';' e UTF-8 com BOM.

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from services.bounds import (
    ellipse_boundary, ellipse_pmax, ellipse_quadratic, feasible_rectangle, intersection_verdict,
)
from services.measurement import measurement_to_doc

CSV_DELIM = ";"
CSV_ENCODING = "utf-8-sig"
FLOAT_FORMAT = "%.17g"
PARQUET_COMPRESSION = "ZSTD"

REPORT_FILE = "report.json"
TRACE_FILE = "trace.json"
MEASUREMENT_FILE = "measurement.json"


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def to_jsonable(value):
    """Complexos viram [re, im]; tuplas viram listas; chaves de dict viram texto."""
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    return value


def write_json(doc: dict, path) -> Path:
    p = Path(path)
    ensure_dir(p.parent)
    with p.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
    return p


def write_csv(df: pd.DataFrame, path) -> Path:
    p = Path(path)
    ensure_dir(p.parent)
    df.to_csv(p, sep=CSV_DELIM, index=False, encoding=CSV_ENCODING, float_format=FLOAT_FORMAT)
    return p


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, sep=CSV_DELIM, encoding=CSV_ENCODING)


# ===================== report.json =====================

def _set_doc(aset):
    if aset is None:
        return None
    doc = {
        "predicate": aset.predicate_tag,
        "intervals": [list(iv) for iv in aset.intervals],
        "endpoint_cases": [list(c) for c in aset.endpoint_cases],
        "domain": list(aset.domain),
        "grid_n": aset.grid_n,
        "refine_tol": aset.refine_tol,
        "empty": aset.is_empty,
        "disconnected": aset.disconnected,
    }
    if not aset.is_empty:
        doc["inf"] = aset.intervals[0][0]
        doc["sup"] = aset.intervals[-1][1]
    return doc


def constants_doc(consts) -> dict | None:
    if consts is None:
        return None
    return {
        "beta": consts.beta,
        "gamma": consts.gamma,
        "psi1": consts.psi1,
        "psi2": consts.psi2,
        "xi1": consts.xi1,
        "xi2": consts.xi2,
        "eta1": consts.eta1,
        "eta2": consts.eta2,
        "b12_1": consts.b12_1,
        "b12_2": consts.b12_2,
        "avgE_phase": consts.avg_phase.tolist(),
    }


def report_to_doc(inputs: dict, cond, meas, consts, report, degeneracy=None, diagnostics=None) -> dict:
    doc = {
        "inputs": {**to_jsonable(inputs), "measurement": measurement_to_doc(cond, meas)},
        "constants": constants_doc(consts),
        "bounds": None,
        "admissible_sets": None,
        "degeneracy": to_jsonable(degeneracy or {}),
        "diagnostics": to_jsonable(diagnostics or {}),
    }
    if report is not None:
        doc["bounds"] = {
            "f_el": report.f_el,
            "f_eu": report.f_eu,
            "f_tilde_el": report.f_tilde_el,
            "f_tilde_eu": report.f_tilde_eu,
            "Q1": report.q1,
            "Q2": report.q2,
        }
        doc["admissible_sets"] = {"A": _set_doc(report.set_a), "A_tilde": _set_doc(report.set_a_tilde)}
        doc["degeneracy"] = to_jsonable(report.degeneracy)
        doc["diagnostics"] = to_jsonable(report.diagnostics)
    return doc


# ===================== Curvas =====================

def _wide_grid(lo: float, hi: float, n: int) -> np.ndarray:
    span = max(hi - lo, 0.01)
    return np.linspace(max(1e-3, lo - span), min(1 - 1e-3, hi + span), n)


def _verdict_rows(consts, grid, tilde: bool) -> pd.DataFrame:
    rows = []
    for f in grid:
        v = intersection_verdict(consts, float(f), tilde)
        rows.append({
            "f": v.f,
            "Delta_tilde" if tilde else "Delta": v.delta,
            "p1_at_r2": v.p1_at_r2,
            "p2_at_r1": v.p2_at_r1,
            "admissible": v.admissible,
            "case": v.case.value,
        })
    return pd.DataFrame(rows)


def write_curves(consts, report, out_dir, curve_n: int, f_values=()) -> list:
    out = ensure_dir(out_dir)
    written = []

    # (i) retângulo viável vs f
    grid = _wide_grid(report.f_el, report.f_eu, curve_n)
    rect = [feasible_rectangle(consts, float(f)) for f in grid]
    df = pd.DataFrame({
        "f": grid,
        "x_lo": [r.x_lo for r in rect],
        "x_hi": [r.x_hi for r in rect],
        "y_lo": [r.y_lo for r in rect],
        "y_hi": [r.y_hi for r in rect],
    })
    written.append(write_csv(df, out / "rectangle.csv"))

    # (ii) Δ_f e valores nos centros, no intervalo elementar
    grid_a = np.linspace(report.f_el, report.f_eu, curve_n)
    written.append(write_csv(_verdict_rows(consts, grid_a, False), out / "delta.csv"))

    # (iii) p_max por fase (com e sem τ)
    cols = {"f": grid}
    for phase in (1, 2):
        cols[f"p{phase}_max"] = [ellipse_pmax(consts, float(f), phase) for f in grid]
        if consts.has_rot:
            cols[f"ptilde{phase}_max"] = [ellipse_pmax(consts, float(f), phase, True) for f in grid]
    written.append(write_csv(pd.DataFrame(cols), out / "ptilde_max.csv"))

    # (iv) Δ̃_f no intervalo melhorado
    if report.f_tilde_el is not None:
        grid_t = np.linspace(report.f_tilde_el, report.f_tilde_eu, curve_n)
        written.append(write_csv(_verdict_rows(consts, grid_t, True), out / "delta_tilde.csv"))

    # (v) fronteiras das elipses
    if not f_values:
        f_values = [report.f_el, 0.5 * (report.f_el + report.f_eu), report.f_eu]
    rows = []
    for f in f_values:
        modes = [False]
        if consts.has_rot and report.f_tilde_el is not None and report.f_tilde_el <= f <= report.f_tilde_eu:
            modes.append(True)
        for tilde in modes:
            for phase in (1, 2):
                q = ellipse_quadratic(consts, f, phase, tilde)
                t, x, y = ellipse_boundary(q, curve_n)
                rows.append(pd.DataFrame({"f": f, "phase": phase, "tilde": tilde, "t": t, "x": x, "y": y}))
    if rows:
        written.append(write_csv(pd.concat(rows, ignore_index=True), out / "ellipses.csv"))
    return written


# ===================== Sweep =====================

SWEEP_COLUMNS = [
    "pair", "sigma1_re", "sigma1_im", "sigma2_re", "sigma2_im", "f1", "R2",
    "f_el", "f_eu", "f_tilde_el", "f_tilde_eu", "inf_A", "sup_A", "inf_A_tilde", "sup_A_tilde",
    "status", "error",
]
NORMALIZED = ["f_el", "f_eu", "f_tilde_el", "f_tilde_eu", "inf_A", "sup_A", "inf_A_tilde", "sup_A_tilde"]


def sweep_frame(rows: list) -> pd.DataFrame:
    df = pd.DataFrame(rows).reindex(columns=SWEEP_COLUMNS)
    for col in NORMALIZED:
        df[col] = pd.to_numeric(df[col], errors="coerce")
        df[f"{col}_norm"] = df[col] / df["f1"]
    return df


def write_sweep(df: pd.DataFrame, out_dir) -> tuple:
    out = ensure_dir(out_dir)
    csv_path = write_csv(df, out / "sweep.csv")
    parquet_path = out / "sweep.parquet"
    table = pa.Table.from_pandas(df, preserve_index=False)
    pq.write_table(table, parquet_path, compression=PARQUET_COMPRESSION)
    return csv_path, parquet_path

