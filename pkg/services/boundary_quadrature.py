# boundary_quadrature.py
# Lagrangianos nulos a partir do traço no contorno circular:
#   ⟨E_k⟩ = −(1/|Ω|)∮ V_k n            ⟨J_l⟩ = (1/|Ω|)∮ x (J_l·n)
#   ⟨E_k·J_l⟩ = −(1/|Ω|)∮ V_k (J_l·n)  ⟨E1·R⊥E2⟩ = (1/|Ω|)∮ V1 ∂V2/∂t
#   ⟨J1·R⊥J2⟩ = −(1/|Ω|)∮ (J1·n) Φ2,   Φ2 = ∫ J2·n desde o nó 0
# com J·n = −σ∂V/∂n. Trapézio periódico na grade uniforme (orientação anti-horária).

import math
from dataclasses import dataclass

import numpy as np

from services.config import REL_TOL, as_complex, read_json
from services.errors import ConfigError, NonConservative, OrientationError
from services.measurement import BoundaryMeasurement

MIN_NODES = 16
SPECTRAL_MIN_NODES = 64
CONSERVATION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    v: np.ndarray           # V complexo nos nós
    dvdn_sigma: np.ndarray  # σ∂V/∂n complexo nos nós
    radius: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex).reshape(-1)
        dv = np.asarray(self.dvdn_sigma, dtype=complex).reshape(-1)
        n = v.size
        if n < MIN_NODES or n % 2:
            raise ConfigError(f"traço precisa de N par ≥ {MIN_NODES} nós (recebido {n})")
        if dv.size != n:
            raise ConfigError(f"V tem {n} amostras e σ∂V/∂n tem {dv.size}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
            raise ConfigError("traço com valores não finitos")
        radius = float(self.radius)
        if not radius > 0:
            raise ConfigError(f"raio inválido: {radius}")
        v.setflags(write=False)
        dv.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "dvdn_sigma", dv)
        object.__setattr__(self, "radius", radius)

    @property
    def n_nodes(self) -> int:
        return self.v.size

    @property
    def theta(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_nodes) / self.n_nodes

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def weight(self) -> float:
        """Peso do trapézio periódico por nó (comprimento de arco)."""
        return 2 * math.pi * self.radius / self.n_nodes

    @property
    def current_normal(self) -> np.ndarray:
        """J·n = −σ∂V/∂n (complexo: parte real → J1·n, imaginária → J2·n)."""
        return -self.dvdn_sigma


def _wavenumbers(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = 0.0  # Nyquist
    return k


def tangential_derivative(samples, radius: float) -> np.ndarray:
    """∂/∂t = (1/R) d/dθ de amostras periódicas reais."""
    f = np.asarray(samples, dtype=float)
    n = f.size
    if n >= SPECTRAL_MIN_NODES:
        d = np.fft.ifft(1j * _wavenumbers(n) * np.fft.fft(f)).real
    else:
        d = (np.roll(f, -1) - np.roll(f, 1)) / (2 * (2 * math.pi / n))
    return d / radius


def _check_conservation(jn: np.ndarray, weight: float) -> None:
    for label, comp in (("J1", jn.real), ("J2", jn.imag)):
        total = abs(float(np.sum(comp))) * weight
        scale = float(np.sum(np.abs(comp))) * weight
        if total > CONSERVATION_TOL * scale:
            raise NonConservative(f"∮ {label}·n = {total:.3e} (escala {scale:.3e}): traço não conserva corrente")


def _antiderivative(f: np.ndarray, radius: float) -> np.ndarray:
    """Primitiva em comprimento de arco a partir do nó 0."""
    n = f.size
    if n >= SPECTRAL_MIN_NODES:
        k = _wavenumbers(n)
        coef = np.fft.fft(f)
        out = np.zeros(n, dtype=complex)
        nz = k != 0
        out[nz] = coef[nz] / (1j * k[nz])
        phi = np.fft.ifft(out).real * radius
    else:
        h = 2 * math.pi * radius / n
        phi = np.concatenate(([0.0], np.cumsum((f[:-1] + f[1:]) / 2) * h))
    return phi - phi[0]


def stream_function(trace: BoundaryTrace, which: int) -> np.ndarray:
    """Φ_which(x) = ∫_{x0}^{x} J_which·n, x0 = nó 0, sentido anti-horário."""
    if which not in (1, 2):
        raise ValueError(f"componente inválida: {which}")
    jn = trace.current_normal
    _check_conservation(jn, trace.weight)
    comp = jn.real if which == 1 else jn.imag
    return _antiderivative(comp, trace.radius)


def null_lagrangians(trace: BoundaryTrace, reference_avg_e=None, rel_tol: float = REL_TOL) -> BoundaryMeasurement:
    th = trace.theta
    nx, ny = np.cos(th), np.sin(th)
    w = trace.weight / trace.area
    big_r = trace.radius
    v1, v2 = trace.v.real, trace.v.imag
    jn = trace.current_normal
    _check_conservation(jn, trace.weight)
    jn1, jn2 = jn.real, jn.imag

    avg_e1 = -w * np.array([v1 @ nx, v1 @ ny])
    avg_e2 = -w * np.array([v2 @ nx, v2 @ ny])
    avg_j1 = w * big_r * np.array([nx @ jn1, ny @ jn1])
    avg_j2 = w * big_r * np.array([nx @ jn2, ny @ jn2])
    power = -w * np.array([v1 @ jn1, v1 @ jn2, v2 @ jn1, v2 @ jn2])
    rot_e = w * float(v1 @ tangential_derivative(v2, big_r))
    rot_j = -w * float(jn1 @ _antiderivative(jn2, big_r))

    if reference_avg_e is not None:
        _check_orientation(avg_e1 + 1j * avg_e2, np.asarray(reference_avg_e, dtype=complex), rel_tol)

    return BoundaryMeasurement(avg_e1, avg_e2, avg_j1, avg_j2, power, rot_e, rot_j)


def _check_orientation(computed: np.ndarray, reference: np.ndarray, rel_tol: float) -> None:
    """Percurso horário reflete θ → −θ: a componente y de ⟨E⟩ troca de sinal."""
    scale = max(float(np.abs(reference).max()), 1e-300)
    tol = max(rel_tol, 1e-8) * scale
    direct = float(np.abs(computed - reference).max())
    mirrored = float(np.abs(computed * np.array([1, -1]) - reference).max())
    if direct > tol and mirrored <= tol:
        raise OrientationError("traço em sentido horário: a convenção exige percurso anti-horário")


# ===================== Documento JSON do traço =====================

def trace_to_doc(trace: BoundaryTrace, cond=None) -> dict:
    doc = {
        "theta_count": trace.n_nodes,
        "radius": trace.radius,
        "V_re": trace.v.real.tolist(),
        "V_im": trace.v.imag.tolist(),
        "sdVdn_re": trace.dvdn_sigma.real.tolist(),
        "sdVdn_im": trace.dvdn_sigma.imag.tolist(),
    }
    if cond is not None:
        doc["sigma1"] = [cond.sigma1.real, cond.sigma1.imag]
        doc["sigma2"] = [cond.sigma2.real, cond.sigma2.imag]
    return doc


def load_trace(source) -> tuple:
    """(BoundaryTrace, (σ1, σ2) ou None) de um dict ou caminho."""
    doc = source if isinstance(source, dict) else read_json(source)
    try:
        count = int(doc["theta_count"])
        v = np.asarray(doc["V_re"], dtype=float) + 1j * np.asarray(doc["V_im"], dtype=float)
        dv = np.asarray(doc["sdVdn_re"], dtype=float) + 1j * np.asarray(doc["sdVdn_im"], dtype=float)
        radius = float(doc["radius"])
    except KeyError as exc:
        raise ConfigError(f"traço sem a chave {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"traço inválido: {exc}") from None
    if v.size != count:
        raise ConfigError(f"theta_count = {count}, mas há {v.size} amostras")
    sigmas = None
    if "sigma1" in doc and "sigma2" in doc:
        sigmas = (as_complex(doc["sigma1"], "sigma1"), as_complex(doc["sigma2"], "sigma2"))
    return BoundaryTrace(v, dv, radius), sigmas
