from types import SimpleNamespace

import pytest

from services.errors import ConfigError, EmptyDomain, EmptySet
from services.interval_scan import bounds_of, point_set, scan


def _union(*spans):
    return lambda f: any(lo <= f <= hi for lo, hi in spans)


def test_always_admissible_returns_whole_domain():
    aset = scan((0.3, 0.7), lambda f: True, 11, 1e-12)
    assert aset.intervals == ((0.3, 0.7),)
    assert not aset.disconnected
    assert bounds_of(aset) == (0.3, 0.7, False)


def test_two_components_are_recovered():
    aset = scan((0.0, 1.0), _union((0.2137, 0.35), (0.6, 0.7071)), 101, 1e-12)
    assert len(aset.intervals) == 2
    (a, b), (c, d) = aset.intervals
    assert a == pytest.approx(0.2137, abs=1e-9)
    assert b == pytest.approx(0.35, abs=1e-9)
    assert c == pytest.approx(0.6, abs=1e-9)
    assert d == pytest.approx(0.7071, abs=1e-9)
    assert aset.disconnected
    inf, sup, disconnected = bounds_of(aset)
    assert (inf, sup) == (a, d) and disconnected
    assert aset.contains(0.3) and not aset.contains(0.5)


def test_refinement_tightens_endpoints():
    predicate = _union((0.31415926, 0.9))
    errors = []
    for tol in (1e-3, 1e-6, 1e-10):
        lo, _ = scan((0.0, 1.0), predicate, 11, tol).intervals[0]
        assert lo >= 0.31415926
        errors.append(lo - 0.31415926)
    assert errors[0] >= errors[1] >= errors[2]
    assert errors[2] <= 1e-10


def test_component_between_grid_points_is_missed_by_coarse_grid():
    # componente mais estreita que o passo da grade não é detectada
    aset = scan((0.0, 1.0), _union((0.41, 0.42)), 11, 1e-12)
    assert aset.is_empty
    with pytest.raises(EmptySet):
        bounds_of(aset)


def test_endpoint_cases_follow_verdict_objects():
    def predicate(f):
        if f < 0.25:
            return SimpleNamespace(admissible=False, case="Disjoint")
        if f < 0.5:
            return SimpleNamespace(admissible=True, case="DeltaNonneg")
        return SimpleNamespace(admissible=True, case="E1insideE2")

    aset = scan((0.0, 1.0), predicate, 21, 1e-12, tag="TildeEllipse")
    assert aset.predicate_tag == "TildeEllipse"
    assert aset.intervals[0][0] == pytest.approx(0.25, abs=1e-9)
    assert aset.endpoint_cases == (("DeltaNonneg", "E1insideE2"),)


@pytest.mark.parametrize("domain", [(0.5, 0.5), (0.6, 0.4)])
def test_empty_domain(domain):
    with pytest.raises(EmptyDomain):
        scan(domain, lambda f: True, 11, 1e-12)


def test_invalid_scan_parameters():
    with pytest.raises(ConfigError):
        scan((0.0, 1.0), lambda f: True, 2, 1e-12)
    with pytest.raises(ConfigError):
        scan((0.0, 1.0), lambda f: True, 11, 1e-12, tag="Circle")


def test_point_set():
    ok = point_set(0.4, SimpleNamespace(admissible=True, case="E1insideE2"))
    assert ok.intervals == ((0.4, 0.4),)
    assert bounds_of(ok).inf == bounds_of(ok).sup == 0.4
    assert point_set(0.4, False).is_empty
