# bounds.py
# Os quatro procedimentos de limite para a fração de volume f da fase 1:
#   1. elementares     f_el, f_eu (diagonais de S_f^(α) não negativas)
#   2. elipses         f admissível se {det S_f^(1) ≥ 0} ∩ {det S_f^(2) ≥ 0} ∩ retângulo ≠ ∅
#   3. elementares melhorados  f̃_el, f̃_eu com v± = E1 ± R⊥E2
#   4. elipses "til"   mesmo teste com det S_f^(α) ≥ τ_f^(α)
#
# Variáveis livres: x = ⟨‖E1^(1)‖²⟩, y = ⟨‖E1^(2)‖²⟩. Fase α usa f* = f (α = 1) ou 1 − f (α = 2).

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from services.config import REL_TOL
from services.errors import EqualModuli, EtaDegenerate, MissingRotData, OrderingViolation
from services.interval_scan import AdmissibleSet
from services.measurement import DerivedConstants


class VerdictCase(str, Enum):
    DELTA_NONNEG = "DeltaNonneg"
    DISJOINT = "Disjoint"
    E1_INSIDE_E2 = "E1insideE2"
    E2_INSIDE_E1 = "E2insideE1"
    BOTH_CENTERS_INSIDE = "BothCentersInside"


def _fstar(f: float, phase: int) -> float:
    return f if phase == 1 else 1.0 - f


# ===================== Limites elementares =====================

def elementary_bounds(consts: DerivedConstants) -> tuple:
    for phase in (1, 2):
        if consts.eta(phase) <= 0:
            raise EtaDegenerate(f"η^({phase}) = {consts.eta(phase):.3e}", phase)
    f_el = consts.e_total(1) / consts.eta1
    f_eu = 1.0 - consts.e_total(2) / consts.eta2
    return f_el, f_eu


@dataclass(frozen=True)
class FeasibleRectangle:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def is_empty(self, tol: float = 0.0) -> bool:
        return self.x_lo > self.x_hi + tol or self.y_lo > self.y_hi + tol


def feasible_rectangle(consts: DerivedConstants, f: float) -> FeasibleRectangle:
    g = 1.0 - f
    return FeasibleRectangle(
        x_lo=consts.e_sq(1, 1) / f,
        x_hi=consts.eta1 - consts.e_sq(1, 2) / f,
        y_lo=consts.e_sq(2, 1) / g,
        y_hi=consts.eta2 - consts.e_sq(2, 2) / g,
    )


@dataclass(frozen=True, eq=False)
class SMatrixPair:
    s1: np.ndarray
    s2: np.ndarray

    def __getitem__(self, phase: int) -> np.ndarray:
        return self.s1 if phase == 1 else self.s2


def s_matrices(consts: DerivedConstants, f: float, x: float, y: float) -> SMatrixPair:
    c = consts
    g = 1.0 - f
    off1 = -c.gamma * x - c.psi1 * y + c.xi1 - c.e_dot(1) / f
    off2 = c.psi2 * x + c.gamma * y - c.xi2 - c.e_dot(2) / g
    s1 = np.array([[x - c.e_sq(1, 1) / f, off1], [off1, -x + c.eta1 - c.e_sq(1, 2) / f]])
    s2 = np.array([[y - c.e_sq(2, 1) / g, off2], [off2, -y + c.eta2 - c.e_sq(2, 2) / g]])
    return SMatrixPair(s1, s2)


# ===================== Elipses =====================

@dataclass(frozen=True)
class EllipseQuadratic:
    """p(x, y) = a1x² + 2a2xy + a3y² + 2a4x + 2a5y + a6 − τ."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    tau: float = 0.0

    @property
    def a6_eff(self) -> float:
        return self.a6 - self.tau

    def coeffs(self) -> tuple:
        return self.a1, self.a2, self.a3, self.a4, self.a5, self.a6_eff

    @property
    def discriminant(self) -> float:
        return self.a1 * self.a3 - self.a2 ** 2

    def __call__(self, x, y):
        return (self.a1 * x * x + 2 * self.a2 * x * y + self.a3 * y * y
                + 2 * self.a4 * x + 2 * self.a5 * y + self.a6_eff)

    def eval_scale(self, x, y) -> float:
        """Soma dos módulos das parcelas: escala do erro de arredondamento de p(x, y)."""
        return float(abs(self.a1) * x * x + 2 * abs(self.a2 * x * y) + abs(self.a3) * y * y
                     + 2 * abs(self.a4 * x) + 2 * abs(self.a5 * y) + abs(self.a6) + abs(self.tau))


def tau_value(consts: DerivedConstants, f: float, phase: int) -> float:
    _require_rot(consts)
    return (consts.b12(phase) - consts.e_rot(phase) / _fstar(f, phase)) ** 2


def _require_rot(consts: DerivedConstants) -> None:
    if not consts.has_rot:
        if consts.cond.moduli_equal():
            raise EqualModuli("|σ1| = |σ2|: maquinaria til indisponível")
        raise MissingRotData("medição sem médias rotacionais: maquinaria til indisponível")


def ellipse_quadratic(consts: DerivedConstants, f: float, phase: int, tilde: bool = False) -> EllipseQuadratic:
    c = consts
    g2 = 1.0 + c.gamma ** 2
    if phase == 1:
        e1, e2 = c.e_sq(1, 1) / f, c.e_sq(1, 2) / f
        lin = c.xi1 - c.e_dot(1) / f
        coeffs = (
            -g2, -c.gamma * c.psi1, -c.psi1 ** 2,
            0.5 * (c.eta1 - e2 + e1 + 2 * c.gamma * lin),
            c.psi1 * lin,
            -(e1 * (c.eta1 - e2) + lin ** 2),
        )
    else:
        g = 1.0 - f
        e1, e2 = c.e_sq(2, 1) / g, c.e_sq(2, 2) / g
        lin = c.xi2 + c.e_dot(2) / g
        coeffs = (
            -c.psi2 ** 2, -c.gamma * c.psi2, -g2,
            c.psi2 * lin,
            0.5 * (c.eta2 - e2 + e1 + 2 * c.gamma * lin),
            -(e1 * (c.eta2 - e2) + lin ** 2),
        )
    tau = tau_value(consts, f, phase) if tilde else 0.0
    return EllipseQuadratic(*coeffs, tau=tau)


def ellipse_center(q: EllipseQuadratic) -> tuple:
    d = q.discriminant
    return (q.a2 * q.a5 - q.a3 * q.a4) / d, (q.a2 * q.a4 - q.a1 * q.a5) / d


def ellipse_pmax(consts: DerivedConstants, f: float, phase: int, tilde: bool = False) -> float:
    fs = _fstar(f, phase)
    if not tilde:
        return (consts.eta(phase) * fs - consts.e_total(phase)) ** 2 / (4 * fs * fs)
    _require_rot(consts)
    plus = consts.v_energy(phase, 1) * fs - consts.v_mean_sq(phase, 1)
    minus = consts.v_energy(phase, -1) * fs - consts.v_mean_sq(phase, -1)
    return plus * minus / (4 * fs * fs)


def _disk_state(consts: DerivedConstants, f: float, phase: int, tilde: bool, rel_tol: float) -> str:
    """"empty", "point" ou "disk", pelos fatores lineares de p_max (forma fechada)."""
    fs = _fstar(f, phase)
    if not tilde:
        lin = consts.eta(phase) * fs - consts.e_total(phase)
        scale = consts.eta(phase) * fs + consts.e_total(phase)
        if abs(lin) <= rel_tol * scale:
            return "point"
        # traço de S negativo: o disco {p ≥ 0} só contém matrizes negativas
        return "disk" if lin > 0 else "empty"
    tol = rel_tol * (consts.eta(phase) * fs + consts.e_total(phase))
    factors = [consts.v_energy(phase, s) * fs - consts.v_mean_sq(phase, s) for s in (1, -1)]
    # fator negativo: p̃max < 0, ou ponto com traço negativo
    if any(v < -tol for v in factors):
        return "empty"
    if any(v <= tol for v in factors):
        return "point"
    return "disk"


def ellipse_extent(q: EllipseQuadratic):
    """(x_min, x_max, y_min, y_max) do disco {p ≥ 0}; None se vazio."""
    cx, cy = ellipse_center(q)
    pmax = q(cx, cy)
    if pmax < 0:
        return None
    d = q.discriminant
    hx = math.sqrt(pmax * -q.a3 / d)
    hy = math.sqrt(pmax * -q.a1 / d)
    return cx - hx, cx + hx, cy - hy, cy + hy


def ellipse_boundary(q: EllipseQuadratic, n: int = 200):
    """n pontos de ∂{p ≥ 0}: p(c + u) = p_max − uᵀKu, K = −[[a1, a2], [a2, a3]]."""
    cx, cy = ellipse_center(q)
    pmax = max(q(cx, cy), 0.0)
    lam, vec = np.linalg.eigh(-np.array([[q.a1, q.a2], [q.a2, q.a3]]))
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    local = np.vstack([np.sqrt(pmax / lam[0]) * np.cos(t), np.sqrt(pmax / lam[1]) * np.sin(t)])
    pts = vec @ local
    return t, cx + pts[0], cy + pts[1]


# ===================== Veredito de interseção =====================

@dataclass(frozen=True)
class AdmissibilityVerdict:
    f: float
    delta: float
    p1_at_r2: float
    p2_at_r1: float
    admissible: bool
    case: VerdictCase
    tilde: bool = False


def mu_coefficients(consts: DerivedConstants, q1: EllipseQuadratic, q2: EllipseQuadratic):
    """μ1..μ6 de |σ1|²p^(1) − |σ2|²p^(2) = μ1x² + μ2xy + μ3y² + μ4x + μ5y + μ6, e suas escalas."""
    m1, m2 = consts.cond.modsq1, consts.cond.modsq2
    factors = (1, 2, 1, 2, 2, 1)
    c1, c2 = q1.coeffs(), q2.coeffs()
    mu = tuple(k * (m1 * a - m2 * b) for k, a, b in zip(factors, c1, c2))
    scale = tuple(k * (m1 * abs(a) + m2 * abs(b)) for k, a, b in zip(factors, c1, c2))
    return mu, scale


def _line_discriminant(q1: EllipseQuadratic, mu, mu_scale, rel_tol: float) -> tuple:
    """Δ e sua escala para a reta μ4x + μ5y + μ6 = 0 cortando ∂{p^(1) = 0}."""
    a1, a2, a3, a4, a5, a6 = q1.coeffs()
    mu4, mu5, mu6 = mu[3], mu[4], mu[5]
    if max(abs(mu4), abs(mu5)) <= rel_tol * max(mu_scale[3], mu_scale[4]):
        # reta degenerada: ou as elipses coincidem, ou as fronteiras não se cortam
        if abs(mu6) <= rel_tol * mu_scale[5]:
            return 0.0, 1.0
        return -math.inf, 1.0
    if abs(mu5) >= abs(mu4):
        nu1 = a1 * mu5 ** 2 - 2 * a2 * mu4 * mu5 + a3 * mu4 ** 2
        nu2 = 2 * (-a2 * mu5 * mu6 + a3 * mu4 * mu6 + a4 * mu5 ** 2 - a5 * mu4 * mu5)
        nu3 = a3 * mu6 ** 2 - 2 * a5 * mu5 * mu6 + a6 * mu5 ** 2
        nu1_scale = abs(a1) * mu5 ** 2 + 2 * abs(a2 * mu4 * mu5) + abs(a3) * mu4 ** 2
    else:
        nu1 = a3 * mu4 ** 2 - 2 * a2 * mu4 * mu5 + a1 * mu5 ** 2
        nu2 = 2 * (-a2 * mu4 * mu6 + a1 * mu5 * mu6 + a5 * mu4 ** 2 - a4 * mu4 * mu5)
        nu3 = a1 * mu6 ** 2 - 2 * a4 * mu4 * mu6 + a6 * mu4 ** 2
        nu1_scale = abs(a3) * mu4 ** 2 + 2 * abs(a2 * mu4 * mu5) + abs(a1) * mu5 ** 2
    if abs(nu1) <= rel_tol * nu1_scale:
        # equação linear ν2·x + ν3 = 0: há raiz real se ν2 ≠ 0
        return (nu2 ** 2, nu2 ** 2) if nu2 != 0 else (-math.inf, 1.0)
    return nu2 ** 2 - 4 * nu1 * nu3, nu2 ** 2 + 4 * abs(nu1 * nu3)


def intersection_verdict(consts: DerivedConstants, f: float, tilde: bool = False,
                         rel_tol: float = REL_TOL) -> AdmissibilityVerdict:
    q1 = ellipse_quadratic(consts, f, 1, tilde)
    q2 = ellipse_quadratic(consts, f, 2, tilde)
    r1 = ellipse_center(q1)
    r2 = ellipse_center(q2)
    state1 = _disk_state(consts, f, 1, tilde, rel_tol)
    state2 = _disk_state(consts, f, 2, tilde, rel_tol)
    p1_at_r2, p2_at_r1 = q1(*r2), q2(*r1)
    in1 = p1_at_r2 >= -rel_tol * q1.eval_scale(*r2)
    in2 = p2_at_r1 >= -rel_tol * q2.eval_scale(*r1)

    mu, mu_scale = mu_coefficients(consts, q1, q2)
    delta, delta_scale = _line_discriminant(q1, mu, mu_scale, rel_tol)

    def verdict(admissible, case):
        return AdmissibilityVerdict(f, delta, p1_at_r2, p2_at_r1, admissible, case, tilde)

    if "empty" in (state1, state2):
        return verdict(False, VerdictCase.DISJOINT)
    # disco reduzido a um ponto: decide pelo valor da outra quadrática nesse ponto
    if state1 == "point":
        return verdict(True, VerdictCase.E1_INSIDE_E2) if in2 else verdict(False, VerdictCase.DISJOINT)
    if state2 == "point":
        return verdict(True, VerdictCase.E2_INSIDE_E1) if in1 else verdict(False, VerdictCase.DISJOINT)

    if delta >= -rel_tol * delta_scale:
        return verdict(True, VerdictCase.DELTA_NONNEG)
    if in1 and in2:
        return verdict(True, VerdictCase.BOTH_CENTERS_INSIDE)
    if in1:
        return verdict(True, VerdictCase.E2_INSIDE_E1)
    if in2:
        return verdict(True, VerdictCase.E1_INSIDE_E2)
    return verdict(False, VerdictCase.DISJOINT)


# ===================== Limites elementares melhorados =====================

@dataclass(frozen=True)
class ImprovedBounds:
    f_tilde_el: float
    f_tilde_eu: float
    q1: float | None
    q2: float | None
    branch_lower: str
    branch_upper: str
    flags: dict = field(default_factory=dict)


def branch_selector(consts: DerivedConstants, phase: int, bound: float) -> str:
    """Qual de v+ / v− realiza o máximo do quociente ‖⟨v⟩‖²/⟨‖v‖²⟩ da fase."""
    _require_rot(consts)
    weight = bound if phase == 1 else 1.0 - bound
    return "plus" if consts.b12(phase) * weight <= consts.e_rot(phase) else "minus"


def _quotients(consts: DerivedConstants, phase: int, rel_tol: float) -> dict:
    out = {}
    for sign, tag in ((1, "plus"), (-1, "minus")):
        energy = consts.v_energy(phase, sign)
        out[tag] = None if energy <= rel_tol * consts.eta(phase) else consts.v_mean_sq(phase, sign) / energy
    return out


def improved_elementary_bounds(consts: DerivedConstants, f_el: float, f_eu: float,
                               rel_tol: float = REL_TOL) -> ImprovedBounds:
    _require_rot(consts)
    quot1 = _quotients(consts, 1, rel_tol)
    quot2 = _quotients(consts, 2, rel_tol)
    flags = {
        "vplus_zero_1": quot1["plus"] is None,
        "vminus_zero_1": quot1["minus"] is None,
        "vplus_zero_2": quot2["plus"] is None,
        "vminus_zero_2": quot2["minus"] is None,
    }
    valid1 = [v for v in quot1.values() if v is not None]
    valid2 = [v for v in quot2.values() if v is not None]

    branch_lower = branch_selector(consts, 1, f_el)
    branch_upper = branch_selector(consts, 2, f_eu)
    if flags["vplus_zero_1"] or flags["vminus_zero_1"]:
        f_tilde_el = f_el
    else:
        f_tilde_el = quot1[branch_lower]
    if flags["vplus_zero_2"] or flags["vminus_zero_2"]:
        f_tilde_eu = f_eu
    else:
        f_tilde_eu = 1.0 - quot2[branch_upper]
    q1 = min(valid1) if valid1 else None
    q2 = 1.0 - min(valid2) if valid2 else None

    tol = 10 * rel_tol
    if f_tilde_el < f_el - tol or f_tilde_eu > f_eu + tol or f_tilde_el > f_tilde_eu + tol:
        raise OrderingViolation(
            f"ordem violada: f_el={f_el:.12f} f̃_el={f_tilde_el:.12f} f̃_eu={f_tilde_eu:.12f} f_eu={f_eu:.12f}"
        )
    f_tilde_el = max(f_tilde_el, f_el)
    f_tilde_eu = min(f_tilde_eu, f_eu)
    return ImprovedBounds(f_tilde_el, f_tilde_eu, q1, q2, branch_lower, branch_upper, flags)


# ===================== Oráculo da matriz M =====================

def m_matrix(consts: DerivedConstants, f: float, x: float, y: float, phase: int) -> np.ndarray:
    """M = [[S, T], [−T, S]] com T = [[0, t], [−t, 0]], t = B12 − ⟨E1⟩·R⊥⟨E2⟩/f*."""
    _require_rot(consts)
    s = s_matrices(consts, f, x, y)[phase]
    t = consts.b12(phase) - consts.e_rot(phase) / _fstar(f, phase)
    tm = np.array([[0.0, t], [-t, 0.0]])
    return np.block([[s, tm], [-tm, s]])


def m_matrix_psd_oracle(consts: DerivedConstants, f: float, x: float, y: float, phase: int,
                        rel_tol: float = REL_TOL) -> bool:
    m = m_matrix(consts, f, x, y, phase)
    eig = np.linalg.eigvalsh(m)
    return bool(eig.min() >= -rel_tol * max(float(np.abs(m).max()), 1e-300))


# ===================== Relatório =====================

@dataclass
class BoundsReport:
    f_el: float
    f_eu: float
    f_tilde_el: float | None = None
    f_tilde_eu: float | None = None
    q1: float | None = None
    q2: float | None = None
    set_a: AdmissibleSet | None = None
    set_a_tilde: AdmissibleSet | None = None
    degeneracy: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def ordering_ok(self, tol: float = 1e-8) -> bool:
        chain = [self.f_el, self.f_tilde_el, self.f_tilde_eu, self.f_eu]
        chain = [v for v in chain if v is not None]
        return all(a <= b + tol for a, b in zip(chain, chain[1:]))
