import numpy as np
import pytest

from conftest import REF_F1, point_cloud
from services.bounds import (
    VerdictCase, branch_selector, elementary_bounds, ellipse_boundary, ellipse_center, ellipse_extent,
    ellipse_pmax, ellipse_quadratic, feasible_rectangle, improved_elementary_bounds, intersection_verdict,
    m_matrix, m_matrix_psd_oracle, mu_coefficients, s_matrices, tau_value,
)
from services.config import REL_TOL
from services.errors import EqualModuli, MissingRotData
from services.measurement import PhaseConductivities, derive_constants


def _quotients(c, phase):
    return {s: c.v_mean_sq(phase, s) / c.v_energy(phase, s) for s in (1, -1)}


# ===================== Configuração de referência =====================

def test_reference_elementary_bounds(ref_bounds):
    _, report = ref_bounds
    assert report.f_el == pytest.approx(0.794, abs=1e-3)
    assert report.f_eu == pytest.approx(0.808, abs=1e-3)
    assert report.f_el <= REF_F1 <= report.f_eu


def test_reference_improved_bounds(ref_bounds):
    _, report = ref_bounds
    assert report.f_tilde_el == pytest.approx(0.798, abs=1e-3)
    assert report.f_tilde_eu == pytest.approx(0.802, abs=1e-3)
    assert report.q1 == pytest.approx(0.776, abs=1e-3)
    assert report.q2 == pytest.approx(0.828, abs=1e-3)
    assert report.q1 <= report.f_el <= report.f_tilde_el <= REF_F1 <= report.f_tilde_eu <= report.f_eu <= report.q2


def test_reference_ellipse_scan_recovers_elementary_bounds(ref_bounds):
    _, report = ref_bounds
    assert len(report.set_a.intervals) == 1
    lo, hi = report.set_a.intervals[0]
    assert lo == pytest.approx(report.f_el, abs=1e-9)
    assert hi == pytest.approx(report.f_eu, abs=1e-9)


def test_reference_tilde_scan(ref_bounds):
    _, report = ref_bounds
    assert len(report.set_a_tilde.intervals) == 1
    lo, hi = report.set_a_tilde.intervals[0]
    assert lo == pytest.approx(0.7987, abs=5e-4)
    assert hi == pytest.approx(0.8012, abs=5e-4)
    assert lo <= REF_F1 <= hi
    assert report.f_tilde_el - 1e-12 <= lo and hi <= report.f_tilde_eu + 1e-12


def test_reference_branch_is_argmax_of_quotients(ref_constants):
    c = ref_constants
    f_el, f_eu = elementary_bounds(c)
    improved = improved_elementary_bounds(c, f_el, f_eu)
    q1, q2 = _quotients(c, 1), _quotients(c, 2)
    assert improved.f_tilde_el == pytest.approx(max(q1.values()))
    assert improved.f_tilde_eu == pytest.approx(1 - max(q2.values()))
    assert q1[1 if improved.branch_lower == "plus" else -1] == pytest.approx(max(q1.values()))


def test_reference_point_ellipse_at_elementary_endpoints(ref_constants):
    c = ref_constants
    f_el, f_eu = elementary_bounds(c)
    scale = c.eta1 ** 2
    assert ellipse_pmax(c, f_el, 1) == pytest.approx(0.0, abs=1e-12 * scale)
    assert ellipse_pmax(c, f_eu, 2) == pytest.approx(0.0, abs=1e-12 * c.eta2 ** 2)


def test_outside_elementary_interval_is_disjoint(ref_constants):
    c = ref_constants
    f_el, f_eu = elementary_bounds(c)
    for f in (f_el - 0.01, f_eu + 0.01):
        v = intersection_verdict(c, f)
        assert not v.admissible
        assert v.case is VerdictCase.DISJOINT
        assert feasible_rectangle(c, f).is_empty()


# ===================== Invariantes estruturais =====================

@pytest.fixture
def clouds(rng):
    return [point_cloud(rng) for _ in range(15)]


def test_bounds_bracket_true_fraction(clouds):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f_el, f_eu = elementary_bounds(c)
        imp = improved_elementary_bounds(c, f_el, f_eu)
        tol = 1e-9
        assert imp.q1 - tol <= f_el <= imp.f_tilde_el + tol
        assert imp.f_tilde_el - tol <= pc.f1 <= imp.f_tilde_eu + tol
        assert imp.f_tilde_eu - tol <= f_eu <= imp.q2 + tol
        assert intersection_verdict(c, pc.f1).admissible
        assert intersection_verdict(c, pc.f1, tilde=True).admissible


def test_branch_selector_matches_larger_quotient(clouds):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f_el, f_eu = elementary_bounds(c)
        for phase, bound in ((1, f_el), (2, f_eu)):
            q = _quotients(c, phase)
            expected = "plus" if q[1] >= q[-1] else "minus"
            if abs(q[1] - q[-1]) > 1e-12:
                assert branch_selector(c, phase, bound) == expected


@pytest.mark.parametrize("tilde", [False, True])
def test_quadratic_terms_cancel_in_line_combination(clouds, tilde):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f = pc.f1
        mu, scale = mu_coefficients(c, ellipse_quadratic(c, f, 1, tilde), ellipse_quadratic(c, f, 2, tilde))
        for k in range(3):
            assert abs(mu[k]) <= 1e-9 * scale[k]


@pytest.mark.parametrize("tilde", [False, True])
def test_pmax_closed_form_matches_center_value(clouds, tilde):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f_el, f_eu = elementary_bounds(c)
        for f in np.linspace(f_el, f_eu, 5)[1:-1]:
            for phase in (1, 2):
                q = ellipse_quadratic(c, f, phase, tilde)
                cx, cy = ellipse_center(q)
                assert q(cx, cy) == pytest.approx(ellipse_pmax(c, f, phase, tilde), abs=1e-9 * q.eval_scale(cx, cy))


def test_quadratic_is_determinant_of_s(clouds, rng):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f = pc.f1
        for x, y in rng.normal(size=(4, 2)):
            s = s_matrices(c, f, x, y)
            for phase in (1, 2):
                q = ellipse_quadratic(c, f, phase)
                assert q(x, y) == pytest.approx(np.linalg.det(s[phase]), abs=1e-9 * q.eval_scale(x, y))


def test_ellipses_are_tangent_to_feasible_rectangle(clouds):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f_el, f_eu = elementary_bounds(c)
        f = 0.5 * (f_el + f_eu)
        rect = feasible_rectangle(c, f)
        ext1 = ellipse_extent(ellipse_quadratic(c, f, 1))
        ext2 = ellipse_extent(ellipse_quadratic(c, f, 2))
        sx = abs(rect.x_lo) + abs(rect.x_hi)
        sy = abs(rect.y_lo) + abs(rect.y_hi)
        assert ext1[0] == pytest.approx(rect.x_lo, abs=1e-8 * sx)
        assert ext1[1] == pytest.approx(rect.x_hi, abs=1e-8 * sx)
        assert ext2[2] == pytest.approx(rect.y_lo, abs=1e-8 * sy)
        assert ext2[3] == pytest.approx(rect.y_hi, abs=1e-8 * sy)


def test_ellipse_boundary_lies_on_zero_level(clouds):
    pc = clouds[0]
    c = derive_constants(pc.cond, pc.meas)
    q = ellipse_quadratic(c, pc.f1, 1, True)
    _, xs, ys = ellipse_boundary(q, 64)
    for x, y in zip(xs, ys):
        assert q(x, y) == pytest.approx(0.0, abs=1e-8 * q.eval_scale(x, y))


def test_m_matrix_eigenvalues_pair_and_match_tau_criterion(clouds, rng):
    for pc in clouds:
        c = derive_constants(pc.cond, pc.meas)
        f = pc.f1
        rect = feasible_rectangle(c, f)
        for _ in range(10):
            x = rng.uniform(rect.x_lo, rect.x_hi)
            y = rng.uniform(rect.y_lo, rect.y_hi)
            for phase in (1, 2):
                m = m_matrix(c, f, x, y, phase)
                eig = np.linalg.eigvalsh(m)
                scale = float(np.abs(m).max())
                assert eig[1] - eig[0] == pytest.approx(0.0, abs=1e-10 * scale)
                assert eig[3] - eig[2] == pytest.approx(0.0, abs=1e-10 * scale)

                q = ellipse_quadratic(c, f, phase, True)
                value = q(x, y)
                if abs(value) <= 1e-6 * q.eval_scale(x, y):
                    continue
                s = s_matrices(c, f, x, y)[phase]
                expected = value >= 0 and np.trace(s) >= 0
                assert m_matrix_psd_oracle(c, f, x, y, phase) == expected


def test_tau_is_square_of_rotational_gap(clouds):
    pc = clouds[0]
    c = derive_constants(pc.cond, pc.meas)
    t = c.b12(1) - c.e_rot(1) / pc.f1
    assert tau_value(c, pc.f1, 1) == pytest.approx(t * t)


def test_tilde_machinery_requires_rotational_data(rng):
    pc = point_cloud(rng)
    c = derive_constants(pc.cond, pc.meas.without_rot())
    f_el, f_eu = elementary_bounds(c)
    with pytest.raises(MissingRotData):
        improved_elementary_bounds(c, f_el, f_eu)
    with pytest.raises(MissingRotData):
        intersection_verdict(c, pc.f1, tilde=True)
    assert intersection_verdict(c, pc.f1).admissible

    pc = point_cloud(rng, cond=PhaseConductivities(1 + 2j, 2 + 1j))
    c = derive_constants(pc.cond, pc.meas)
    with pytest.raises(EqualModuli):
        tau_value(c, pc.f1, 1)


# ===================== Oráculo por força bruta =====================
#
# margem(x, y) = min(λmin(S^(1)), λmin(S^(2))) (ou de M no modo til), côncava em (x, y).
# Limite inferior: melhor ponto avaliado (grade 400×400 + busca de compasso + ponto verdadeiro).
# Limite superior: dual max_z min(m1, m2) = min_λ max_z [λ·m1 + (1 − λ)·m2], λ ∈ [0, 1].

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _phase_margins(c, f, xs, ys, tilde):
    s = s_matrices(c, f, xs, ys)
    out = []
    for phase in (1, 2):
        a, b, d = s[phase][0, 0], s[phase][0, 1], s[phase][1, 1]
        t2 = 0.0
        if tilde:
            fs = f if phase == 1 else 1.0 - f
            t2 = (c.b12(phase) - c.e_rot(phase) / fs) ** 2
        out.append(0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b * b + t2))
    return out


def _grid_best(fun, rect, n):
    xs, ys = np.meshgrid(np.linspace(rect.x_lo, rect.x_hi, n), np.linspace(rect.y_lo, rect.y_hi, n))
    vals = fun(xs, ys)
    k = int(np.argmax(vals))
    return float(vals.flat[k]), float(xs.flat[k]), float(ys.flat[k])


def _compass(fun, rect, start, n, max_iter=300):
    """Busca de compasso no retângulo: passo mantido enquanto melhora, metade quando não."""
    best, bx, by = start
    hx = max(rect.x_hi - rect.x_lo, 1e-300) / (n - 1)
    hy = max(rect.y_hi - rect.y_lo, 1e-300) / (n - 1)
    floor_x = 1e-14 * (abs(rect.x_lo) + abs(rect.x_hi) + 1e-300)
    floor_y = 1e-14 * (abs(rect.y_lo) + abs(rect.y_hi) + 1e-300)
    offsets = np.arange(-2, 3)
    for _ in range(max_iter):
        xs, ys = np.meshgrid(np.clip(bx + hx * offsets, rect.x_lo, rect.x_hi),
                             np.clip(by + hy * offsets, rect.y_lo, rect.y_hi))
        vals = fun(xs, ys)
        k = int(np.argmax(vals))
        if vals.flat[k] > best:
            best, bx, by = float(vals.flat[k]), float(xs.flat[k]), float(ys.flat[k])
        else:
            hx, hy = hx / 2, hy / 2
            if hx <= floor_x and hy <= floor_y:
                break
    return best, bx, by


def _margin_lower(c, f, tilde, rect, extra_points=()):
    def fun(xs, ys):
        return np.minimum(*_phase_margins(c, f, xs, ys, tilde))

    start = _grid_best(fun, rect, 400)
    best = _compass(fun, rect, start, 400)[0]
    for x, y in extra_points:
        best = max(best, float(fun(np.array(x), np.array(y))))
    return best


def _margin_upper(c, f, tilde, rect, iters=40):
    def g(lam):
        def fun(xs, ys):
            m1, m2 = _phase_margins(c, f, xs, ys, tilde)
            return lam * m1 + (1.0 - lam) * m2
        return _compass(fun, rect, _grid_best(fun, rect, 41), 41)[0]

    # g é convexa em λ: seção áurea
    a, b = 0.0, 1.0
    x1, x2 = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    g1, g2 = g(x1), g(x2)
    seen = [g(0.0), g(1.0), g1, g2]
    for _ in range(iters):
        if g1 <= g2:
            b, x2, g2 = x2, x1, g1
            x1 = b - GOLDEN * (b - a)
            g1 = g(x1)
            seen.append(g1)
        else:
            a, x1, g1 = x1, x2, g2
            x2 = a + GOLDEN * (b - a)
            g2 = g(x2)
            seen.append(g2)
    return min(seen)


def _oracle_disagrees(c, f, tilde, admissible, tol, truth=None):
    rect = feasible_rectangle(c, f)
    if rect.is_empty():
        return admissible
    extra = [truth] if truth is not None else []
    lower = _margin_lower(c, f, tilde, rect, extra)
    if admissible:
        return lower < -tol and _margin_upper(c, f, tilde, rect) < -tol
    return lower > tol


def test_oracle_accepts_touching_regions_at_true_fraction():
    # regiões admissíveis que mal se tocam em f = f1 (margem máxima ≈ 0 no ponto verdadeiro)
    rng = np.random.default_rng(7)
    for _ in range(62):
        pc = point_cloud(rng, n_points=tuple(int(v) for v in rng.integers(2, 5, size=2)))
    c = derive_constants(pc.cond, pc.meas)
    truth = (pc.a_phase[0, 0, 0], pc.a_phase[1, 0, 0])
    tol = 10 * REL_TOL * (c.eta1 + c.eta2)
    rect = feasible_rectangle(c, pc.f1)
    for tilde in (False, True):
        assert intersection_verdict(c, pc.f1, tilde).admissible
        assert _margin_lower(c, pc.f1, tilde, rect, [truth]) >= -tol
        assert _margin_upper(c, pc.f1, tilde, rect) >= -tol
        assert not _oracle_disagrees(c, pc.f1, tilde, True, tol, truth)


@pytest.mark.slow
def test_verdict_agrees_with_brute_force_oracle():
    rng = np.random.default_rng(7)
    disagreements = []
    for instance in range(100):
        sizes = tuple(int(v) for v in rng.integers(2, 5, size=2))
        pc = point_cloud(rng, n_points=sizes)
        c = derive_constants(pc.cond, pc.meas)
        f_el, f_eu = elementary_bounds(c)
        imp = improved_elementary_bounds(c, f_el, f_eu)
        tol = 10 * REL_TOL * (c.eta1 + c.eta2)
        truth = (pc.a_phase[0, 0, 0], pc.a_phase[1, 0, 0])
        for tilde, lo, hi in ((False, f_el, f_eu), (True, imp.f_tilde_el, imp.f_tilde_eu)):
            width = hi - lo
            tests = np.append(np.linspace(lo - 0.15 * width, hi + 0.15 * width, 9), pc.f1)
            for f in np.clip(tests, 1e-3, 1 - 1e-3):
                f = float(f)
                verdict = intersection_verdict(c, f, tilde)
                at_truth = truth if f == pc.f1 else None
                if _oracle_disagrees(c, f, tilde, verdict.admissible, tol, at_truth):
                    disagreements.append((instance, tilde, f, verdict.case.value))
    assert disagreements == []
