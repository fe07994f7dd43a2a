from dataclasses import dataclass

import numpy as np
import pytest

from services.boundary_quadrature import null_lagrangians
from services.forward_fields import (
    LayeredDiskGeometry, affine_bc, boundary_trace, exact_moments, solve_layered_disk, FourierBC,
)
from services.measurement import BoundaryMeasurement, PhaseConductivities, derive_constants, rot_dot
from services.pipeline import compute_bounds

# Anel de referência: R = (2, 3, 5), fases (1, 2, 1), V0 = u·x
REF_SIGMA1 = 3 + 8j
REF_SIGMA2 = 8 + 6j
REF_RADII = (2.0, 3.0, 5.0)
REF_PHASES = (1, 2, 1)
REF_U = (-2 + 1j, 0.6 - 1.4j)
REF_F1 = 0.8


@pytest.fixture(scope="session")
def ref_cond():
    return PhaseConductivities(REF_SIGMA1, REF_SIGMA2)


@pytest.fixture(scope="session")
def ref_solution(ref_cond):
    geom = LayeredDiskGeometry(REF_RADII, REF_PHASES)
    return solve_layered_disk(geom, ref_cond, affine_bc(REF_U, geom.outer_radius))


@pytest.fixture(scope="session")
def ref_measurement(ref_solution):
    return null_lagrangians(boundary_trace(ref_solution, 2048))


@pytest.fixture(scope="session")
def ref_exact(ref_solution):
    return exact_moments(ref_solution)


@pytest.fixture(scope="session")
def ref_constants(ref_cond, ref_measurement):
    return derive_constants(ref_cond, ref_measurement)


@pytest.fixture(scope="session")
def ref_bounds(ref_cond, ref_measurement):
    """(DerivedConstants, BoundsReport) com a grade padrão."""
    return compute_bounds(ref_cond, ref_measurement, 2001, 1e-10, f1_true=REF_F1)


# ===================== Geradores aleatórios =====================

def random_conductivities(rng) -> PhaseConductivities:
    """Par com argumentos e módulos bem separados (β ≠ 0, |σ1| ≠ |σ2|)."""
    while True:
        s1 = complex(rng.uniform(0.5, 10.0), rng.uniform(-5.0, 10.0))
        s2 = complex(rng.uniform(0.5, 10.0), rng.uniform(-5.0, 10.0))
        beta = s1.real * s2.imag - s1.imag * s2.real
        m1, m2 = abs(s1) ** 2, abs(s2) ** 2
        if abs(beta) > 0.1 * abs(s1) * abs(s2) and abs(m1 - m2) > 0.1 * max(m1, m2):
            return PhaseConductivities(s1, s2)


@dataclass
class PointCloud:
    """Campos discretos por fase: medição consistente com f verdadeiro conhecido."""

    cond: PhaseConductivities
    meas: BoundaryMeasurement
    f1: float
    a_phase: np.ndarray    # [α-1, m-1, n-1]
    b12_phase: np.ndarray
    avg_phase: np.ndarray  # [α-1, m-1, componente]


def point_cloud(rng, f1=None, n_points=(3, 3), cond=None) -> PointCloud:
    cond = cond or random_conductivities(rng)
    f1 = float(rng.uniform(0.15, 0.85)) if f1 is None else f1
    avg_e = np.zeros(2, dtype=complex)
    avg_j = np.zeros(2, dtype=complex)
    power = np.zeros(4)
    rot_e = rot_j = 0.0
    a_phase = np.zeros((2, 2, 2))
    b12 = np.zeros(2)
    avg_phase = np.zeros((2, 2, 2))
    for alpha, (frac, k) in enumerate(zip((f1, 1.0 - f1), n_points)):
        weights = rng.dirichlet(np.ones(k)) * frac
        fields = rng.normal(size=(k, 2)) + 1j * rng.normal(size=(k, 2))
        sigma = cond.sigma(alpha + 1)
        for w, e in zip(weights, fields):
            j = sigma * e
            parts, jparts = (e.real, e.imag), (j.real, j.imag)
            avg_e += w * e
            avg_j += w * j
            for idx, (m, n) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
                power[idx] += w * parts[m] @ jparts[n]
                a_phase[alpha, m, n] += w * parts[m] @ parts[n]
            rot_e += w * rot_dot(*parts)
            rot_j += w * rot_dot(*jparts)
            b12[alpha] += w * rot_dot(*parts)
            avg_phase[alpha, 0] += w * parts[0]
            avg_phase[alpha, 1] += w * parts[1]
    meas = BoundaryMeasurement(avg_e.real, avg_e.imag, avg_j.real, avg_j.imag, power, rot_e, rot_j)
    return PointCloud(cond, meas, f1, a_phase, b12, avg_phase)


def random_layered_disk(rng):
    """(solução, bc) para um disco de 2 a 4 camadas com modos ±1, 2 e −3."""
    n_layers = int(rng.integers(2, 5))
    radii = np.cumsum(rng.uniform(0.3, 1.2, size=n_layers))
    phases = [1 + (i % 2) for i in range(n_layers)]
    if rng.random() < 0.5:
        phases = [3 - a for a in phases]
    cond = random_conductivities(rng)
    modes = {
        n: complex(rng.normal(), rng.normal())
        for n in (1, -1, 2, -3)
    }
    geom = LayeredDiskGeometry(tuple(radii), tuple(phases))
    bc = FourierBC(modes)
    return solve_layered_disk(geom, cond, bc), bc


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
