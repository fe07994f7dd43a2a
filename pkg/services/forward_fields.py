# forward_fields.py
# Soluções 2-D exatas para discos em camadas (fonte de dados e oráculo):
#   - solve_layered_disk: problema de transmissão por modo de Fourier
#   - coreshell_solution: núcleo V = z + k·z̄², casca com coeficientes fechados
#   - laminate_moments: campos constantes por fase
#   - exact_moments / boundary_trace: momentos de volume e traço no contorno
#
# Em cada camada ℓ: V_ℓ(r, θ) = Σ_n (a_ℓn r^|n| + b_ℓn r^−|n|) e^{inθ}  (n = 0: a + b·log r).
# Com V complexo, r^|n| e^{inθ} é z^n (n > 0) ou z̄^|n| (n < 0), e r^−|n| e^{inθ}
# é 1/z̄^n (n > 0) ou 1/z^|n| (n < 0): a base já separa potências de z e de z̄.

import math
from dataclasses import dataclass

import numpy as np

from services.boundary_quadrature import BoundaryTrace
from services.errors import ConfigError, InvalidRadii, SingularTransmission
from services.measurement import BoundaryMeasurement, PhaseConductivities, rot_dot

COND_MAX = 1e14


@dataclass(frozen=True)
class LayeredDiskGeometry:
    radii: tuple
    layer_phase: tuple

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        phases = tuple(int(a) for a in self.layer_phase)
        if not radii:
            raise InvalidRadii("geometria sem camadas")
        if len(phases) != len(radii):
            raise InvalidRadii(f"{len(radii)} raios para {len(phases)} fases")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise InvalidRadii(f"raios precisam ser positivos e estritamente crescentes: {radii}")
        if any(a not in (1, 2) for a in phases):
            raise InvalidRadii(f"fase fora de {{1, 2}}: {phases}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "layer_phase", phases)

    @property
    def n_layers(self) -> int:
        return len(self.radii)

    @property
    def outer_radius(self) -> float:
        return self.radii[-1]

    @property
    def area(self) -> float:
        return math.pi * self.outer_radius ** 2

    def inner_radius(self, layer: int) -> float:
        return 0.0 if layer == 0 else self.radii[layer - 1]

    def volume_fraction(self, phase: int = 1) -> float:
        total = 0.0
        for layer, a in enumerate(self.layer_phase):
            if a == phase:
                total += self.radii[layer] ** 2 - self.inner_radius(layer) ** 2
        return total / self.outer_radius ** 2


@dataclass(frozen=True)
class FourierBC:
    modes: dict

    def __post_init__(self):
        modes = {int(n): complex(c) for n, c in dict(self.modes).items()}
        if not modes:
            raise ConfigError("condição de contorno sem modos")
        if any(not (math.isfinite(c.real) and math.isfinite(c.imag)) for c in modes.values()):
            raise ConfigError("coeficiente de contorno não finito")
        object.__setattr__(self, "modes", modes)


def affine_bc(u, radius: float) -> FourierBC:
    """V0 = u·x no círculo de raio R (u complexo, sem conjugação) → modos ±1."""
    ux, uy = complex(u[0]), complex(u[1])
    return FourierBC({1: radius * (ux - 1j * uy) / 2, -1: radius * (ux + 1j * uy) / 2})


# ===================== Termos c·r^s·e^{itθ} =====================
# Um campo escalar complexo numa camada é uma soma de termos (coef, s, t).

def _terms(coefs, s, t):
    coefs = np.asarray(coefs, dtype=complex)
    keep = coefs != 0
    return coefs[keep], np.asarray(s, dtype=float)[keep], np.asarray(t, dtype=int)[keep]


def _concat(*parts):
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def _scaled(terms, c):
    return terms[0] * c, terms[1], terms[2]


def _real(terms):
    c, s, t = terms
    return np.concatenate([c / 2, np.conj(c) / 2]), np.concatenate([s, s]), np.concatenate([t, -t])


def _imag(terms):
    c, s, t = terms
    return np.concatenate([c / 2j, -np.conj(c) / 2j]), np.concatenate([s, s]), np.concatenate([t, -t])


def _radial_integral(e, r_in, r_out):
    """∫ r^e dr em [r_in, r_out], vetorizado; ramo log para e = −1."""
    e = np.asarray(e, dtype=float)
    out = np.empty_like(e)
    is_log = np.isclose(e, -1.0)
    if np.any(is_log):
        out[is_log] = math.log(r_out / r_in)
    p = e[~is_log] + 1.0
    out[~is_log] = (r_out ** p - r_in ** p) / p
    return out


def _integrate(terms, r_in, r_out) -> complex:
    c, s, t = terms
    zero = t == 0
    if not np.any(zero):
        return 0j
    return 2 * math.pi * complex(np.sum(c[zero] * _radial_integral(s[zero] + 1, r_in, r_out)))


def _integrate_product(f, g, r_in, r_out) -> complex:
    cf, sf, tf = f
    cg, sg, tg = g
    if cf.size == 0 or cg.size == 0:
        return 0j
    i, j = np.nonzero(tf[:, None] + tg[None, :] == 0)
    if i.size == 0:
        return 0j
    return 2 * math.pi * complex(np.sum(cf[i] * cg[j] * _radial_integral(sf[i] + sg[j] + 1, r_in, r_out)))


def _eval_terms(terms, r, th):
    c, s, t = terms
    if c.size == 0:
        return np.zeros(np.shape(r), dtype=complex)
    r = np.asarray(r, dtype=float)[..., None]
    th = np.asarray(th, dtype=float)[..., None]
    return np.sum(c * r ** s * np.exp(1j * t * th), axis=-1)


# ===================== Solução =====================

@dataclass(frozen=True, eq=False)
class FieldSolution:
    geometry: LayeredDiskGeometry
    sigmas: tuple
    modes: tuple
    coeffs: np.ndarray  # [camada, modo, (a, b)]

    def sigma(self, layer: int) -> complex:
        return self.sigmas[layer]

    def mode_coeffs(self, layer: int, n: int):
        k = self.modes.index(n)
        return complex(self.coeffs[layer, k, 0]), complex(self.coeffs[layer, k, 1])

    def wirtinger_terms(self, layer: int):
        """(∂_z V, ∂_z̄ V) da camada como listas de termos."""
        pc, ps, pt, qc, qs, qt = [], [], [], [], [], []
        for k, n in enumerate(self.modes):
            a, b = self.coeffs[layer, k]
            if layer == 0:
                b = 0j
            m = abs(n)
            if n > 0:
                pc.append(n * a); ps.append(n - 1); pt.append(n - 1)
                qc.append(-n * b); qs.append(-n - 1); qt.append(n + 1)
            elif n < 0:
                qc.append(m * a); qs.append(m - 1); qt.append(-(m - 1))
                pc.append(-m * b); ps.append(-m - 1); pt.append(-(m + 1))
            else:
                pc.append(b / 2); ps.append(-1); pt.append(-1)
                qc.append(b / 2); qs.append(-1); qt.append(1)
        return _terms(pc, ps, pt), _terms(qc, qs, qt)

    def field_terms(self, layer: int, scale: complex = 1.0):
        """Componentes reais (x1, y1, x2, y2) de scale·E, E = −∇V, como listas de termos."""
        p, q = self.wirtinger_terms(layer)
        ex = _scaled(_concat(p, q), -scale)
        ey = _scaled(_concat(p, _scaled(q, -1)), -1j * scale)
        return _real(ex), _real(ey), _imag(ex), _imag(ey)

    def _layer_of(self, r):
        return np.searchsorted(np.asarray(self.geometry.radii), r, side="left")

    def potential_at(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        r, th = np.hypot(x, y), np.arctan2(y, x)
        layer = self._layer_of(r)
        out = np.zeros(r.shape, dtype=complex)
        for ell in range(self.geometry.n_layers):
            mask = layer == ell
            if not np.any(mask):
                continue
            rr, tt = r[mask], th[mask]
            acc = np.zeros(rr.shape, dtype=complex)
            for k, n in enumerate(self.modes):
                a, b = self.coeffs[ell, k]
                m = abs(n)
                if n == 0:
                    acc += a + (b * np.log(rr) if ell > 0 else 0)
                else:
                    radial = a * rr ** m + (b * rr ** (-m) if ell > 0 else 0)
                    acc += radial * np.exp(1j * n * tt)
            out[mask] = acc
        return out

    def field_at(self, x, y):
        """(E_x, E_y) complexos nos pontos; parte real = E1, imaginária = E2."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        r, th = np.hypot(x, y), np.arctan2(y, x)
        layer = self._layer_of(r)
        ex = np.zeros(r.shape, dtype=complex)
        ey = np.zeros(r.shape, dtype=complex)
        for ell in range(self.geometry.n_layers):
            mask = layer == ell
            if not np.any(mask):
                continue
            p, q = self.wirtinger_terms(ell)
            pv = _eval_terms(p, r[mask], th[mask])
            qv = _eval_terms(q, r[mask], th[mask])
            ex[mask] = -(pv + qv)
            ey[mask] = -1j * (pv - qv)
        return ex, ey


def _basis(n: int, r: float, big_r: float):
    """(φa, φb, r·φa', r·φb') na base escalonada por R."""
    m = abs(n)
    if m == 0:
        return 1.0, math.log(r / big_r), 0.0, 1.0
    pa = (r / big_r) ** m
    pb = (big_r / r) ** m
    return pa, pb, m * pa, -m * pb


def _layer_sigmas(geom: LayeredDiskGeometry, cond: PhaseConductivities) -> tuple:
    return tuple(cond.sigma(a) for a in geom.layer_phase)


def _solve_mode(geom, sigmas, n: int, c_n: complex) -> np.ndarray:
    nl = geom.n_layers
    big_r = geom.outer_radius
    size = 2 * nl - 1

    def cols(layer):
        return (0, None) if layer == 0 else (2 * layer - 1, 2 * layer)

    mat = np.zeros((size, size), dtype=complex)
    rhs = np.zeros(size, dtype=complex)
    row = 0
    for i in range(nl - 1):
        r = geom.radii[i]
        for layer, sign in ((i, 1.0), (i + 1, -1.0)):
            pa, pb, dpa, dpb = _basis(n, r, big_r)
            ca, cb = cols(layer)
            s = sigmas[layer]
            mat[row, ca] += sign * pa
            mat[row + 1, ca] += sign * s * dpa
            if cb is not None:
                mat[row, cb] += sign * pb
                mat[row + 1, cb] += sign * s * dpb
        row += 2
    pa, pb, _, _ = _basis(n, big_r, big_r)
    ca, cb = cols(nl - 1)
    mat[row, ca] = pa
    if cb is not None:
        mat[row, cb] = pb
    rhs[row] = c_n

    cond_number = np.linalg.cond(mat)
    if not np.isfinite(cond_number) or cond_number > COND_MAX:
        raise SingularTransmission(f"modo {n}: sistema de transmissão singular (cond = {cond_number:.3e})")
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularTransmission(f"modo {n}: {exc}") from None

    # volta para os coeficientes brutos a·r^m + b·r^−m (n = 0: a + b·log r)
    m = abs(n)
    out = np.zeros((nl, 2), dtype=complex)
    for layer in range(nl):
        ca, cb = cols(layer)
        big_a = sol[ca]
        big_b = sol[cb] if cb is not None else 0j
        if m == 0:
            out[layer] = (big_a - big_b * math.log(big_r), big_b)
        else:
            out[layer] = (big_a / big_r ** m, big_b * big_r ** m)
    return out


def solve_layered_disk(geom: LayeredDiskGeometry, cond: PhaseConductivities, bc: FourierBC) -> FieldSolution:
    sigmas = _layer_sigmas(geom, cond)
    modes = tuple(sorted(bc.modes))
    coeffs = np.zeros((geom.n_layers, len(modes), 2), dtype=complex)
    for k, n in enumerate(modes):
        coeffs[:, k, :] = _solve_mode(geom, sigmas, n, bc.modes[n])
    coeffs.setflags(write=False)
    return FieldSolution(geom, sigmas, modes, coeffs)


def coreshell_solution(r1: float, r2: float, cond: PhaseConductivities, k: float) -> FieldSolution:
    """Núcleo (fase 1) V = z + k·z̄²; casca (fase 2) V = a·z + b/z̄ + c·z̄² + d/z².

    Os coeficientes da casca saem da continuidade de V e de σ∂V/∂r em r = R1.
    """
    if not 0 < r1 < r2:
        raise InvalidRadii(f"core–shell exige 0 < R1 < R2 (recebido R1={r1}, R2={r2})")
    geom = LayeredDiskGeometry((r1, r2), (1, 2))
    s1, s2 = cond.sigma1, cond.sigma2
    a = (s1 + s2) / (2 * s2)
    b = r1 ** 2 * (s2 - s1) / (2 * s2)
    c = k * (s1 + s2) / (2 * s2)
    d = k * r1 ** 4 * (s2 - s1) / (2 * s2)
    modes = (-2, 1)
    coeffs = np.array([
        [[k, 0], [1, 0]],
        [[c, d], [a, b]],
    ], dtype=complex)
    coeffs.setflags(write=False)
    return FieldSolution(geom, _layer_sigmas(geom, cond), modes, coeffs)


def transmission_residuals(sol: FieldSolution, bc: FourierBC | None = None) -> float:
    """Maior salto relativo de V e σ∂V/∂r nas interfaces (e desvio do dado de Dirichlet)."""
    geom = sol.geometry
    worst = 0.0
    for k, n in enumerate(sol.modes):
        m = abs(n)

        def trace(layer, r):
            a, b = sol.coeffs[layer, k]
            if layer == 0:
                b = 0j
            if m == 0:
                return a + b * math.log(r), sol.sigma(layer) * b / r
            v = a * r ** m + b * r ** (-m)
            dv = m * (a * r ** (m - 1) - b * r ** (-m - 1))
            return v, sol.sigma(layer) * dv

        for i in range(geom.n_layers - 1):
            r = geom.radii[i]
            v_in, j_in = trace(i, r)
            v_out, j_out = trace(i + 1, r)
            worst = max(
                worst,
                abs(v_in - v_out) / max(abs(v_in) + abs(v_out), 1e-300),
                abs(j_in - j_out) / max(abs(j_in) + abs(j_out), 1e-300),
            )
        if bc is not None:
            v_r, _ = trace(geom.n_layers - 1, geom.outer_radius)
            c_n = bc.modes.get(n, 0j)
            worst = max(worst, abs(v_r - c_n) / max(abs(c_n), 1.0))
    return worst


def boundary_trace(sol: FieldSolution, n_nodes: int) -> BoundaryTrace:
    """Amostra V e σ∂V/∂r no raio externo numa grade uniforme (anti-horária)."""
    geom = sol.geometry
    big_r = geom.outer_radius
    last = geom.n_layers - 1
    sigma = sol.sigma(last)
    theta = 2 * math.pi * np.arange(n_nodes) / n_nodes
    v = np.zeros(n_nodes, dtype=complex)
    dv = np.zeros(n_nodes, dtype=complex)
    for k, n in enumerate(sol.modes):
        a, b = sol.coeffs[last, k]
        if last == 0:
            b = 0j
        m = abs(n)
        phase = np.exp(1j * n * theta)
        if m == 0:
            v += a + b * math.log(big_r)
            dv += b / big_r
        else:
            v += (a * big_r ** m + b * big_r ** (-m)) * phase
            dv += m * (a * big_r ** (m - 1) - b * big_r ** (-m - 1)) * phase
    return BoundaryTrace(v, sigma * dv, big_r)


# ===================== Momentos exatos =====================

@dataclass(frozen=True, eq=False)
class ExactMoments:
    f1: float
    a_phase: np.ndarray    # A_mn^(α) em [α-1, m-1, n-1]
    b12_phase: np.ndarray  # B12^(α)
    avg_phase: np.ndarray  # ⟨E_m^(α)⟩ em [α-1, m-1, componente]
    avg_e: np.ndarray      # ⟨E⟩ complexo
    avg_j: np.ndarray      # ⟨J⟩ complexo
    power: np.ndarray
    rot_e: float
    rot_j: float

    def eta(self, phase: int) -> float:
        return float(self.a_phase[phase - 1, 0, 0] + self.a_phase[phase - 1, 1, 1])

    def to_measurement(self) -> BoundaryMeasurement:
        return BoundaryMeasurement(
            self.avg_e.real, self.avg_e.imag, self.avg_j.real, self.avg_j.imag,
            self.power, self.rot_e, self.rot_j,
        )


def _dot(f, g, r_in, r_out):
    """∫ f·g para vetores dados como pares (componente x, componente y)."""
    return (_integrate_product(f[0], g[0], r_in, r_out) + _integrate_product(f[1], g[1], r_in, r_out)).real


def _cross(f, g, r_in, r_out):
    """∫ f·R⊥g."""
    return (_integrate_product(f[0], g[1], r_in, r_out) - _integrate_product(f[1], g[0], r_in, r_out)).real


def exact_moments(sol: FieldSolution) -> ExactMoments:
    geom = sol.geometry
    area = geom.area
    a_phase = np.zeros((2, 2, 2))
    b12 = np.zeros(2)
    avg_phase = np.zeros((2, 2, 2))
    avg_e = np.zeros(2, dtype=complex)
    avg_j = np.zeros(2, dtype=complex)
    power = np.zeros(4)
    rot_j = 0.0

    for ell in range(geom.n_layers):
        alpha = geom.layer_phase[ell] - 1
        r_in, r_out = geom.inner_radius(ell), geom.radii[ell]
        e1x, e1y, e2x, e2y = sol.field_terms(ell)
        j1x, j1y, j2x, j2y = sol.field_terms(ell, sol.sigma(ell))
        e_parts = ((e1x, e1y), (e2x, e2y))
        j_parts = ((j1x, j1y), (j2x, j2y))

        for m in range(2):
            for n in range(m, 2):
                val = _dot(e_parts[m], e_parts[n], r_in, r_out)
                a_phase[alpha, m, n] += val
                if n != m:
                    a_phase[alpha, n, m] += val
            mean = np.array([_integrate(e_parts[m][0], r_in, r_out).real, _integrate(e_parts[m][1], r_in, r_out).real])
            avg_phase[alpha, m] += mean
            jmean = np.array([_integrate(j_parts[m][0], r_in, r_out).real, _integrate(j_parts[m][1], r_in, r_out).real])
            avg_e += mean * (1 if m == 0 else 1j)
            avg_j += jmean * (1 if m == 0 else 1j)

        b12[alpha] += _cross(e_parts[0], e_parts[1], r_in, r_out)
        rot_j += _cross(j_parts[0], j_parts[1], r_in, r_out)
        for idx, (k, l) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            power[idx] += _dot(e_parts[k], j_parts[l], r_in, r_out)

    for arr in (a_phase, b12, avg_phase, avg_e, avg_j, power):
        arr /= area
        arr.setflags(write=False)
    rot_j /= area
    return ExactMoments(
        f1=geom.volume_fraction(1), a_phase=a_phase, b12_phase=b12, avg_phase=avg_phase,
        avg_e=avg_e, avg_j=avg_j, power=power, rot_e=float(b12.sum()), rot_j=float(rot_j),
    )


def laminate_moments(f1: float, cond: PhaseConductivities, e_field1, normal=(1.0, 0.0)) -> ExactMoments:
    """Laminado: campo constante em cada fase; E tangencial e J normal contínuos."""
    if not 0.0 < f1 < 1.0:
        raise ConfigError(f"f1 fora de (0, 1): {f1}")
    nrm = np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    tng = np.array([-nrm[1], nrm[0]])
    e1 = np.asarray(e_field1, dtype=complex)
    e2 = (e1 @ tng) * tng + (cond.sigma1 / cond.sigma2) * (e1 @ nrm) * nrm

    fractions = (f1, 1.0 - f1)
    fields = (e1, e2)
    a_phase = np.zeros((2, 2, 2))
    b12 = np.zeros(2)
    avg_phase = np.zeros((2, 2, 2))
    power = np.zeros(4)
    avg_e = np.zeros(2, dtype=complex)
    avg_j = np.zeros(2, dtype=complex)
    rot_j = 0.0
    for alpha, (fa, ea) in enumerate(zip(fractions, fields)):
        ja = cond.sigma(alpha + 1) * ea
        parts = (ea.real, ea.imag)
        jparts = (ja.real, ja.imag)
        for m in range(2):
            avg_phase[alpha, m] = fa * parts[m]
            for n in range(2):
                a_phase[alpha, m, n] = fa * parts[m] @ parts[n]
        for idx, (k, l) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            power[idx] += fa * parts[k] @ jparts[l]
        b12[alpha] = fa * rot_dot(parts[0], parts[1])
        rot_j += fa * rot_dot(jparts[0], jparts[1])
        avg_e += fa * ea
        avg_j += fa * ja

    for arr in (a_phase, b12, avg_phase, avg_e, avg_j, power):
        arr.setflags(write=False)
    return ExactMoments(
        f1=f1, a_phase=a_phase, b12_phase=b12, avg_phase=avg_phase,
        avg_e=avg_e, avg_j=avg_j, power=power, rot_e=float(b12.sum()), rot_j=float(rot_j),
    )
