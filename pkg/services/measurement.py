# measurement.py
# Modelo de dados da medição de contorno e a álgebra de splitting:
# uma medição (médias de E, J, quatro potências, duas médias rotacionais)
# vira as constantes β, γ, ψ, ξ, η, B12 consumidas por todos os limites.
#
# Convenção: índice m ∈ {1, 2} = parte real / imaginária; fase α ∈ {1, 2}.
# R⊥ = [[0, 1], [-1, 0]] (rotação horária de 90°), logo a·R⊥b = a_x b_y − a_y b_x.

from dataclasses import dataclass, field

import numpy as np

from services.config import REL_TOL, as_complex, read_json
from services.errors import BetaZero, ConfigError, EqualConductivities, EtaDegenerate


def rot_dot(a, b) -> float:
    """a·R⊥b."""
    return float(a[0] * b[1] - a[1] * b[0])


def _vec(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ConfigError(f"'{name}' precisa de {n} valores, recebido {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"'{name}' contém valores não finitos")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PhaseConductivities:
    sigma1: complex
    sigma2: complex

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            s = complex(getattr(self, name))
            if not (np.isfinite(s.real) and np.isfinite(s.imag)):
                raise ConfigError(f"{name} não é finito: {s}")
            if s.real <= 0:
                raise ConfigError(f"{name} precisa ter parte real positiva: {s}")
            object.__setattr__(self, name, s)
        if self.sigma1 == self.sigma2:
            raise EqualConductivities(f"σ1 = σ2 = {self.sigma1}")

    def beta(self) -> float:
        s1, s2 = self.sigma1, self.sigma2
        return s1.real * s2.imag - s1.imag * s2.real

    def sigma(self, phase: int) -> complex:
        return self.sigma1 if phase == 1 else self.sigma2

    @property
    def modsq1(self) -> float:
        return abs(self.sigma1) ** 2

    @property
    def modsq2(self) -> float:
        return abs(self.sigma2) ** 2

    def moduli_equal(self, rel_tol: float = REL_TOL) -> bool:
        return abs(self.modsq1 - self.modsq2) <= rel_tol * max(self.modsq1, self.modsq2)


@dataclass(frozen=True, eq=False)
class BoundaryMeasurement:
    avg_e1: np.ndarray
    avg_e2: np.ndarray
    avg_j1: np.ndarray
    avg_j2: np.ndarray
    power: np.ndarray  # ⟨E1·J1⟩, ⟨E1·J2⟩, ⟨E2·J1⟩, ⟨E2·J2⟩
    rot_e: float | None = None
    rot_j: float | None = None

    def __post_init__(self):
        for name in ("avg_e1", "avg_e2", "avg_j1", "avg_j2"):
            object.__setattr__(self, name, _vec(getattr(self, name), 2, name))
        object.__setattr__(self, "power", _vec(self.power, 4, "power"))
        if (self.rot_e is None) != (self.rot_j is None):
            raise ConfigError("rotE e rotJ precisam vir juntos")
        for name in ("rot_e", "rot_j"):
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                if not np.isfinite(v):
                    raise ConfigError(f"'{name}' não é finito")
                object.__setattr__(self, name, v)

    @property
    def rot_available(self) -> bool:
        return self.rot_e is not None

    @property
    def avg_e(self) -> np.ndarray:
        return self.avg_e1 + 1j * self.avg_e2

    @property
    def avg_j(self) -> np.ndarray:
        return self.avg_j1 + 1j * self.avg_j2

    def without_rot(self) -> "BoundaryMeasurement":
        """Mesma medição sem as médias rotacionais (dado 3-D)."""
        return BoundaryMeasurement(self.avg_e1, self.avg_e2, self.avg_j1, self.avg_j2, self.power)


def composite_measurement(avg_e, avg_j) -> BoundaryMeasurement:
    """Compósito periódico: ⟨E_k·J_l⟩ = ⟨E_k⟩·⟨J_l⟩ e idem para as médias rotacionais."""
    e = np.asarray(avg_e, dtype=complex)
    j = np.asarray(avg_j, dtype=complex)
    e1, e2, j1, j2 = e.real, e.imag, j.real, j.imag
    power = [e1 @ j1, e1 @ j2, e2 @ j1, e2 @ j2]
    return BoundaryMeasurement(e1, e2, j1, j2, power, rot_dot(e1, e2), rot_dot(j1, j2))


def phase_field_averages(cond: PhaseConductivities, meas: BoundaryMeasurement) -> np.ndarray:
    """⟨E_m^(α)⟩ como array [α-1, m-1, componente]."""
    s1, s2 = cond.sigma1, cond.sigma2
    e, j = meas.avg_e, meas.avg_j
    e_phase1 = (s2 * e - j) / (s2 - s1)
    e_phase2 = (-s1 * e + j) / (s2 - s1)
    out = np.empty((2, 2, 2))
    for a, ea in enumerate((e_phase1, e_phase2)):
        out[a, 0] = ea.real
        out[a, 1] = ea.imag
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DerivedConstants:
    cond: PhaseConductivities
    beta: float
    gamma: float
    psi1: float
    psi2: float
    xi1: float
    xi2: float
    eta1: float
    eta2: float
    b12_1: float | None
    b12_2: float | None
    avg_phase: np.ndarray
    warnings: tuple = field(default=())

    @property
    def has_rot(self) -> bool:
        return self.b12_1 is not None and self.b12_2 is not None

    def eta(self, phase: int) -> float:
        return self.eta1 if phase == 1 else self.eta2

    def psi(self, phase: int) -> float:
        return self.psi1 if phase == 1 else self.psi2

    def xi(self, phase: int) -> float:
        return self.xi1 if phase == 1 else self.xi2

    def b12(self, phase: int) -> float | None:
        return self.b12_1 if phase == 1 else self.b12_2

    def avg(self, phase: int, m: int) -> np.ndarray:
        return self.avg_phase[phase - 1, m - 1]

    # --- estatísticas por fase usadas pelos limites ---

    def e_sq(self, phase: int, m: int) -> float:
        v = self.avg(phase, m)
        return float(v @ v)

    def e_total(self, phase: int) -> float:
        return self.e_sq(phase, 1) + self.e_sq(phase, 2)

    def e_dot(self, phase: int) -> float:
        return float(self.avg(phase, 1) @ self.avg(phase, 2))

    def e_rot(self, phase: int) -> float:
        return rot_dot(self.avg(phase, 1), self.avg(phase, 2))

    def v_mean_sq(self, phase: int, sign: int) -> float:
        """‖⟨v±⟩‖² com v± = E1 ± R⊥E2 (‖R⊥w‖ = ‖w‖)."""
        return self.e_total(phase) + 2 * sign * self.e_rot(phase)

    def v_energy(self, phase: int, sign: int) -> float:
        """⟨‖v±‖²⟩ = η ± 2·B12."""
        return self.eta(phase) + 2 * sign * self.b12(phase)


def derive_constants(cond: PhaseConductivities, meas: BoundaryMeasurement, rel_tol: float = REL_TOL) -> DerivedConstants:
    s1r, s1i = cond.sigma1.real, cond.sigma1.imag
    s2r, s2i = cond.sigma2.real, cond.sigma2.imag
    beta = cond.beta()
    if abs(beta) <= rel_tol * abs(cond.sigma1) * abs(cond.sigma2):
        raise BetaZero(f"β = {beta:.3e}: σ1 e σ2 têm o mesmo argumento, o método não se aplica")

    p11, p12, p21, p22 = (float(p) for p in meas.power)
    gamma = (s1r * s2r + s1i * s2i) / beta
    psi1 = cond.modsq2 / beta
    psi2 = cond.modsq1 / beta
    xi1 = (s2i * p12 + s2r * p11) / beta
    xi2 = (s1i * p12 + s1r * p11) / beta
    eta1 = (s2r * (p21 - p12) + s2i * (p11 + p22)) / beta
    eta2 = (s1r * (p12 - p21) - s1i * (p11 + p22)) / beta

    scale = max(abs(eta1), abs(eta2), abs(xi1), abs(xi2))
    tol = rel_tol * scale
    for phase, eta in ((1, eta1), (2, eta2)):
        if eta <= tol:
            kind = "negativo além da tolerância (dados inconsistentes)" if eta < -tol else "nulo"
            raise EtaDegenerate(f"η^({phase}) = {eta:.3e} {kind}: o campo se anula na fase {phase}", phase)

    warnings = []
    b12_1 = b12_2 = None
    if not meas.rot_available:
        warnings.append("rot_unavailable: sem médias rotacionais, limites melhorados desativados")
    elif cond.moduli_equal(rel_tol):
        warnings.append("equal_moduli: |σ1| = |σ2|, B12 não recuperável")
    else:
        den = cond.modsq2 - cond.modsq1
        b12_1 = (cond.modsq2 * meas.rot_e - meas.rot_j) / den
        b12_2 = (-cond.modsq1 * meas.rot_e + meas.rot_j) / den
        for phase, eta, b in ((1, eta1, b12_1), (2, eta2, b12_2)):
            if min(eta + 2 * b, eta - 2 * b) < -tol:
                warnings.append(f"v_energy_negative: η^({phase}) ± 2B12^({phase}) < 0")

    return DerivedConstants(
        cond=cond, beta=beta, gamma=gamma, psi1=psi1, psi2=psi2, xi1=xi1, xi2=xi2,
        eta1=eta1, eta2=eta2, b12_1=b12_1, b12_2=b12_2,
        avg_phase=phase_field_averages(cond, meas), warnings=tuple(warnings),
    )


def reduced_system_solve(consts: DerivedConstants, x: float, y: float) -> tuple:
    """(A21^(1), A21^(2), A22^(1), A22^(2)) dados x = A11^(1), y = A11^(2)."""
    c = consts
    a21_1 = -c.gamma * x - c.psi1 * y + c.xi1
    a21_2 = c.psi2 * x + c.gamma * y - c.xi2
    a22_1 = -x + c.eta1
    a22_2 = -y + c.eta2
    return a21_1, a21_2, a22_1, a22_2


def power_system(cond: PhaseConductivities, meas: BoundaryMeasurement):
    """Sistema 4×6 nas incógnitas (A11^1, A11^2, A21^1, A21^2, A22^1, A22^2)."""
    s1r, s1i = cond.sigma1.real, cond.sigma1.imag
    s2r, s2i = cond.sigma2.real, cond.sigma2.imag
    mat = np.array([
        [s1r, s2r, -s1i, -s2i, 0.0, 0.0],
        [s1i, s2i, s1r, s2r, 0.0, 0.0],
        [0.0, 0.0, s1r, s2r, -s1i, -s2i],
        [0.0, 0.0, s1i, s2i, s1r, s2r],
    ])
    return mat, np.array(meas.power, dtype=float)


# ===================== Documento JSON da medição =====================

def load_measurement(source) -> tuple:
    """Lê {sigma1, sigma2, avgE, avgJ, power, rotE?, rotJ?} de um dict ou caminho."""
    doc = source if isinstance(source, dict) else read_json(source)
    try:
        cond = PhaseConductivities(as_complex(doc["sigma1"], "sigma1"), as_complex(doc["sigma2"], "sigma2"))
        avg_e = np.asarray(doc["avgE"], dtype=float)
        avg_j = np.asarray(doc["avgJ"], dtype=float)
        power = doc["power"]
    except KeyError as exc:
        raise ConfigError(f"documento de medição sem a chave {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"documento de medição inválido: {exc}") from None
    if avg_e.shape != (2, 2) or avg_j.shape != (2, 2):
        raise ConfigError("'avgE' e 'avgJ' precisam ser 2×2 (componente × re/im)")
    meas = BoundaryMeasurement(
        avg_e[:, 0], avg_e[:, 1], avg_j[:, 0], avg_j[:, 1], power,
        doc.get("rotE"), doc.get("rotJ"),
    )
    return cond, meas


def measurement_to_doc(cond: PhaseConductivities, meas: BoundaryMeasurement) -> dict:
    return {
        "sigma1": [cond.sigma1.real, cond.sigma1.imag],
        "sigma2": [cond.sigma2.real, cond.sigma2.imag],
        "avgE": np.column_stack([meas.avg_e1, meas.avg_e2]).tolist(),
        "avgJ": np.column_stack([meas.avg_j1, meas.avg_j2]).tolist(),
        "power": [float(p) for p in meas.power],
        "rotE": meas.rot_e,
        "rotJ": meas.rot_j,
    }
