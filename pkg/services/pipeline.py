# pipeline.py
# Orquestração dos modos do voltbound:
#   forward  → gera o traço (discos) ou a medição (laminado)
#   bounds   → lê traço/medição e calcula o relatório de limites
#   pipeline → forward + bounds em memória, com diagnósticos contra os momentos exatos
#   sweep    → anel de três camadas variando R2, uma linha por (par de σ, f1)
#
# Só esta camada (e o script de entrada) fala com o console, via `log`.

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from services.boundary_quadrature import load_trace, null_lagrangians, trace_to_doc
from services.bounds import (
    BoundsReport, elementary_bounds, ellipse_extent, ellipse_quadratic, feasible_rectangle,
    improved_elementary_bounds, intersection_verdict, mu_coefficients,
)
from services.config import REL_TOL, RunConfig
from services.errors import (
    BetaZero, ConfigError, DegeneracyError, EtaDegenerate, OrderingViolation, VoltboundError,
)
from services.forward_fields import (
    FourierBC, LayeredDiskGeometry, affine_bc, boundary_trace, coreshell_solution, exact_moments,
    laminate_moments, solve_layered_disk, transmission_residuals,
)
from services.interval_scan import bounds_of, point_set, scan
from services.measurement import PhaseConductivities, derive_constants, load_measurement, measurement_to_doc
from services.report import (
    MEASUREMENT_FILE, REPORT_FILE, TRACE_FILE, ensure_dir, report_to_doc, sweep_frame, write_curves,
    write_json, write_sweep,
)

# domínio [lo, hi] mais estreito que isto é tratado como ponto (limites elementares coincidentes)
POINT_DOMAIN_TOL = 1e-9
# folga para dizer que f1 verdadeiro pertence ao conjunto admissível
F1_MEMBERSHIP_TOL = 1e-8


def fmt_elapsed(seconds: float) -> str:
    m, s = divmod(int(round(seconds)), 60)
    return f"{m:02d}:{s:02d}"


@dataclass
class PipelineResult:
    mode: str
    cond: PhaseConductivities | None = None
    meas: object = None
    consts: object = None
    report: BoundsReport | None = None
    artifacts: list = field(default_factory=list)
    frame: object = None
    exit_code: int = 0


# ===================== Geradores =====================

def build_solution(cfg: RunConfig, cond: PhaseConductivities):
    """(FieldSolution, FourierBC ou None) para os geradores de disco."""
    p = cfg.generator_params
    if cfg.generator == "layered_disk":
        geom = LayeredDiskGeometry(p["radii"], p["layer_phase"])
        if "affine_u" in p:
            bc = affine_bc(p["affine_u"], geom.outer_radius)
        else:
            bc = FourierBC(p["bc_modes"])
        return solve_layered_disk(geom, cond, bc), bc
    if cfg.generator == "coreshell":
        return coreshell_solution(p["R1"], p["R2"], cond, p["k"]), None
    raise ConfigError(f"gerador sem solução de disco: {cfg.generator}")


def build_laminate(cfg: RunConfig, cond: PhaseConductivities):
    p = cfg.generator_params
    return laminate_moments(p["f1"], cond, p["field"], p["normal"])


def run_inputs(cfg: RunConfig) -> dict:
    return {
        "mode": cfg.mode,
        "config_path": cfg.config_path,
        "generator": cfg.generator,
        "generator_params": cfg.generator_params,
        "trace_file": cfg.trace_file,
        "measurement_file": cfg.measurement_file,
        "quadrature_n": cfg.quadrature_n,
        "grid_n": cfg.grid_n,
        "refine_tol": cfg.refine_tol,
    }


# ===================== Limites =====================

def _scan_or_point(consts, lo: float, hi: float, tilde: bool, grid_n: int, refine_tol: float, rel_tol: float):
    tag = "TildeEllipse" if tilde else "Ellipse"
    predicate = partial(intersection_verdict, consts, tilde=tilde, rel_tol=rel_tol)
    if hi - lo <= POINT_DOMAIN_TOL:
        mid = 0.5 * (lo + hi)
        return point_set(mid, predicate(mid), tag)
    return scan((lo, hi), predicate, grid_n, refine_tol, tag)


def _structural_residuals(consts, f: float, tilde: bool) -> dict:
    """μ1..μ3 (devem se anular) e tangência elipse × retângulo em f."""
    q1 = ellipse_quadratic(consts, f, 1, tilde)
    q2 = ellipse_quadratic(consts, f, 2, tilde)
    mu, scale = mu_coefficients(consts, q1, q2)
    mu_res = max(abs(mu[k]) / max(scale[k], 1e-300) for k in range(3))
    out = {"mu_quadratic_residual": mu_res}
    if not tilde:
        rect = feasible_rectangle(consts, f)
        ext1, ext2 = ellipse_extent(q1), ellipse_extent(q2)
        if ext1 is not None and ext2 is not None:
            width = max(abs(rect.x_hi) + abs(rect.x_lo), abs(rect.y_hi) + abs(rect.y_lo), 1e-300)
            out["tangency_residual"] = max(
                abs(ext1[0] - rect.x_lo), abs(ext1[1] - rect.x_hi),
                abs(ext2[2] - rect.y_lo), abs(ext2[3] - rect.y_hi),
            ) / width
    return out


def compute_bounds(cond: PhaseConductivities, meas, grid_n: int, refine_tol: float,
                   rel_tol: float = REL_TOL, f1_true: float | None = None):
    """(DerivedConstants, BoundsReport): os quatro procedimentos sobre uma medição."""
    consts = derive_constants(cond, meas, rel_tol)
    f_el, f_eu = elementary_bounds(consts)
    report = BoundsReport(f_el, f_eu)
    report.degeneracy = {
        "beta_zero": False,
        "eta_zero_1": False,
        "eta_zero_2": False,
        "rot_unavailable": not meas.rot_available,
        "equal_moduli": meas.rot_available and not consts.has_rot,
        "tilde_disabled": not consts.has_rot,
    }
    diag = {"warnings": list(consts.warnings)}

    report.set_a = _scan_or_point(consts, f_el, f_eu, False, grid_n, refine_tol, rel_tol)
    mid = 0.5 * (f_el + f_eu)
    diag["structural"] = {"f": mid, "ellipse": _structural_residuals(consts, mid, False)}

    if consts.has_rot:
        improved = improved_elementary_bounds(consts, f_el, f_eu, rel_tol)
        report.f_tilde_el, report.f_tilde_eu = improved.f_tilde_el, improved.f_tilde_eu
        report.q1, report.q2 = improved.q1, improved.q2
        report.degeneracy.update(improved.flags)
        diag["branch_lower"] = improved.branch_lower
        diag["branch_upper"] = improved.branch_upper
        report.set_a_tilde = _scan_or_point(
            consts, improved.f_tilde_el, improved.f_tilde_eu, True, grid_n, refine_tol, rel_tol,
        )
        diag["structural"]["tilde_ellipse"] = _structural_residuals(consts, mid, True)

    report.degeneracy["disconnected_A"] = report.set_a.disconnected
    if report.set_a_tilde is not None:
        report.degeneracy["disconnected_A_tilde"] = report.set_a_tilde.disconnected

    if f1_true is not None:
        diag["f1_true"] = f1_true
        diag["f1_in_A"] = report.set_a.contains(f1_true, F1_MEMBERSHIP_TOL)
        if report.set_a_tilde is not None:
            diag["f1_in_A_tilde"] = report.set_a_tilde.contains(f1_true, F1_MEMBERSHIP_TOL)
    report.diagnostics = diag
    return consts, report


def check_report(report: BoundsReport, tol: float = 1e-8) -> None:
    """Levanta EmptySet / OrderingViolation quando o relatório não sustenta limites."""
    bounds_of(report.set_a)
    if report.set_a_tilde is not None:
        bounds_of(report.set_a_tilde)
    if not report.ordering_ok(tol):
        raise OrderingViolation(
            f"cadeia f_el ≤ f̃_el ≤ f̃_eu ≤ f_eu violada: "
            f"{report.f_el}, {report.f_tilde_el}, {report.f_tilde_eu}, {report.f_eu}"
        )


def degeneracy_from_error(exc: DegeneracyError) -> dict:
    phase = getattr(exc, "phase", None)
    return {
        "beta_zero": isinstance(exc, BetaZero),
        "eta_zero_1": isinstance(exc, EtaDegenerate) and phase == 1,
        "eta_zero_2": isinstance(exc, EtaDegenerate) and phase == 2,
        "error": f"{type(exc).__name__}: {exc}",
    }


def _max_discrepancy(meas, exact) -> float:
    pairs = (
        (meas.avg_e, exact.avg_e),
        (meas.avg_j, exact.avg_j),
        (meas.power, exact.power),
        (np.array([meas.rot_e, meas.rot_j]), np.array([exact.rot_e, exact.rot_j])),
    )
    return max(float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) for a, b in pairs)


# ===================== Modos =====================

def _finish(cfg: RunConfig, cond, meas, extra_diag: dict, log, f1_true=None) -> PipelineResult:
    out = ensure_dir(cfg.out_dir)
    inputs = run_inputs(cfg)
    report_path = out / REPORT_FILE
    try:
        consts, report = compute_bounds(cond, meas, cfg.grid_n, cfg.refine_tol, f1_true=f1_true)
    except DegeneracyError as exc:
        write_json(report_to_doc(inputs, cond, meas, None, None, degeneracy_from_error(exc), extra_diag), report_path)
        log(f"[AVISO] Dados degenerados; relatório parcial em {report_path}")
        raise
    report.diagnostics.update(extra_diag)

    artifacts = [write_json(report_to_doc(inputs, cond, meas, consts, report), report_path)]
    log(f"[INFO] f_el = {report.f_el:.6f} | f_eu = {report.f_eu:.6f}")
    if report.f_tilde_el is not None:
        log(f"[INFO] f̃_el = {report.f_tilde_el:.6f} | f̃_eu = {report.f_tilde_eu:.6f}")
    for warning in consts.warnings:
        log(f"[AVISO] {warning}")
    if cfg.emit_curves:
        artifacts += write_curves(consts, report, out / "curves", cfg.curve_n, cfg.curve_f_values)
        log(f"[INFO] Curvas CSV em {out / 'curves'}")

    check_report(report)
    for name, aset in (("A", report.set_a), ("Ã", report.set_a_tilde)):
        if aset is not None:
            spans = " ∪ ".join(f"[{lo:.6f}, {hi:.6f}]" for lo, hi in aset.intervals)
            log(f"[INFO] {name} = {spans}")
    log(f"[OK] Relatório: {report_path}")
    return PipelineResult(cfg.mode, cond, meas, consts, report, artifacts)


def run_forward(cfg: RunConfig, log=print) -> PipelineResult:
    cond = PhaseConductivities(cfg.sigma1, cfg.sigma2)
    out = ensure_dir(cfg.out_dir)
    if cfg.generator == "laminate":
        meas = build_laminate(cfg, cond).to_measurement()
        path = write_json(measurement_to_doc(cond, meas), out / MEASUREMENT_FILE)
        log(f"[OK] Medição do laminado: {path}")
        return PipelineResult(cfg.mode, cond, meas, artifacts=[path])

    sol, bc = build_solution(cfg, cond)
    log(f"[INFO] Resíduo de transmissão: {transmission_residuals(sol, bc):.2e}")
    trace = boundary_trace(sol, cfg.quadrature_n)
    path = write_json(trace_to_doc(trace, cond), out / TRACE_FILE)
    log(f"[OK] Traço ({trace.n_nodes} nós): {path}")
    return PipelineResult(cfg.mode, cond, artifacts=[path])


def run_bounds(cfg: RunConfig, log=print) -> PipelineResult:
    if cfg.measurement_file:
        cond, meas = load_measurement(cfg.measurement_file)
        log(f"[INFO] Medição: {cfg.measurement_file}")
    else:
        trace, sigmas = load_trace(cfg.trace_file)
        if cfg.has_conductivities:
            sigmas = (cfg.sigma1, cfg.sigma2)
        elif sigmas is None:
            raise ConfigError("sigma1/sigma2 ausentes: informe no config ou no traço")
        cond = PhaseConductivities(*sigmas)
        meas = null_lagrangians(trace)
        log(f"[INFO] Traço: {cfg.trace_file} ({trace.n_nodes} nós)")
    return _finish(cfg, cond, meas, {}, log)


def run_pipeline(cfg: RunConfig, log=print) -> PipelineResult:
    cond = PhaseConductivities(cfg.sigma1, cfg.sigma2)
    if cfg.generator == "laminate":
        moments = build_laminate(cfg, cond)
        return _finish(cfg, cond, moments.to_measurement(), {}, log, f1_true=moments.f1)

    sol, bc = build_solution(cfg, cond)
    trace = boundary_trace(sol, cfg.quadrature_n)
    meas = null_lagrangians(trace)
    exact = exact_moments(sol)
    extra = {
        "transmission_residual": transmission_residuals(sol, bc),
        "a11_true": [float(exact.a_phase[0, 0, 0]), float(exact.a_phase[1, 0, 0])],
        "b12_true": exact.b12_phase.tolist(),
        "null_lagrangian_discrepancy": _max_discrepancy(meas, exact),
    }
    log(f"[INFO] f1 verdadeiro = {exact.f1:.6f} | discrepância dos lagrangianos = "
        f"{extra['null_lagrangian_discrepancy']:.2e}")
    return _finish(cfg, cond, meas, extra, log, f1_true=exact.f1)


# ===================== Sweep =====================

def sweep_radius(r1: float, r3: float, f1: float) -> float:
    """R2 tal que núcleo (r < R1) + anel externo (R2 < r < R3) ocupem a fração f1."""
    return math.sqrt(r1 ** 2 + r3 ** 2 * (1.0 - f1))


def sweep_tasks(cfg: RunConfig) -> list:
    sw = cfg.sweep
    return [
        {
            "pair": name, "sigma1": s1, "sigma2": s2, "f1": f1,
            "R1": sw["R1"], "R3": sw["R3"], "affine_u": sw["affine_u"],
            "quadrature_n": cfg.quadrature_n, "grid_n": cfg.grid_n, "refine_tol": cfg.refine_tol,
        }
        for name, s1, s2 in sw["pairs"]
        for f1 in sw["f_values"]
    ]


def sweep_row(task: dict) -> dict:
    """Uma linha do sweep; erros da linha ficam em status/error."""
    s1, s2, f1 = task["sigma1"], task["sigma2"], task["f1"]
    r2 = sweep_radius(task["R1"], task["R3"], f1)
    row = {
        "pair": task["pair"], "sigma1_re": s1.real, "sigma1_im": s1.imag,
        "sigma2_re": s2.real, "sigma2_im": s2.imag, "f1": f1, "R2": r2,
        "status": "ok", "error": "", "exit_code": 0,
    }
    try:
        cond = PhaseConductivities(s1, s2)
        geom = LayeredDiskGeometry((task["R1"], r2, task["R3"]), (1, 2, 1))
        sol = solve_layered_disk(geom, cond, affine_bc(task["affine_u"], geom.outer_radius))
        meas = null_lagrangians(boundary_trace(sol, task["quadrature_n"]))
        _, report = compute_bounds(cond, meas, task["grid_n"], task["refine_tol"], f1_true=f1)
        row.update({
            "f_el": report.f_el, "f_eu": report.f_eu,
            "f_tilde_el": report.f_tilde_el, "f_tilde_eu": report.f_tilde_eu,
        })
        for key, aset in (("A", report.set_a), ("A_tilde", report.set_a_tilde)):
            if aset is not None and not aset.is_empty:
                row[f"inf_{key}"] = aset.intervals[0][0]
                row[f"sup_{key}"] = aset.intervals[-1][1]
        check_report(report)
    except VoltboundError as exc:
        row.update(status=type(exc).__name__, error=str(exc), exit_code=exc.exit_code)
    return row


def run_sweep(cfg: RunConfig, log=print) -> PipelineResult:
    tasks = sweep_tasks(cfg)
    n_pairs = len(cfg.sweep["pairs"])
    log(f"[INFO] {len(tasks)} linhas ({n_pairs} pares × {len(cfg.sweep['f_values'])} valores de f1)")
    t0 = time.time()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(sweep_row, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        rows = [sweep_row(t) for t in tasks]

    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log(f"[AVISO] {r['pair']} f1={r['f1']:.4f}: {r['status']} ({r['error']})")

    frame = sweep_frame(rows)
    csv_path, parquet_path = write_sweep(frame, cfg.out_dir)
    elapsed = fmt_elapsed(time.time() - t0)
    if failed:
        log(f"[AVISO] Sweep concluído com {len(failed)} falha(s) em {elapsed}: {csv_path} | {parquet_path}")
    else:
        log(f"[OK] Sweep em {elapsed}: {csv_path} | {parquet_path}")
    exit_code = max((r["exit_code"] for r in failed), default=0)
    return PipelineResult(cfg.mode, artifacts=[Path(csv_path), Path(parquet_path)], frame=frame, exit_code=exit_code)


RUNNERS = {
    "forward": run_forward,
    "bounds": run_bounds,
    "pipeline": run_pipeline,
    "sweep": run_sweep,
}
