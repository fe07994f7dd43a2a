# interval_scan.py
# Varredura de valores-teste f: grade uniforme (extremos incluídos), cada troca
# admissível ↔ inadmissível refinada por bisseção sobre o predicado booleano.

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from services.errors import ConfigError, EmptyDomain, EmptySet

PREDICATE_TAGS = ("Ellipse", "TildeEllipse")


@dataclass(frozen=True)
class AdmissibleSet:
    intervals: tuple          # ((lo, hi), ...) ordenados e disjuntos
    predicate_tag: str
    grid_n: int
    refine_tol: float
    domain: tuple = ()
    endpoint_cases: tuple = ()  # ((caso em lo, caso em hi), ...)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def disconnected(self) -> bool:
        return len(self.intervals) > 1

    def contains(self, f: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= f <= hi + tol for lo, hi in self.intervals)


class SetBounds(NamedTuple):
    inf: float
    sup: float
    disconnected: bool


def _admissible(verdict) -> bool:
    return bool(getattr(verdict, "admissible", verdict))


def _case(verdict):
    case = getattr(verdict, "case", None)
    return getattr(case, "value", case)


def _bisect(predicate: Callable, a: float, b: float, va, vb, tol: float):
    """Estreita [a, b] mantendo admissível(a) ≠ admissível(b)."""
    side_a = _admissible(va)
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        vm = predicate(mid)
        if _admissible(vm) == side_a:
            a, va = mid, vm
        else:
            b, vb = mid, vm
    return a, b, va, vb


def scan(domain, predicate: Callable, grid_n: int, refine_tol: float, tag: str = "Ellipse") -> AdmissibleSet:
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise EmptyDomain(f"domínio vazio: [{lo}, {hi}]")
    if grid_n < 3:
        raise ConfigError(f"grid_n precisa ser ≥ 3 (recebido {grid_n})")
    if tag not in PREDICATE_TAGS:
        raise ConfigError(f"predicado desconhecido: {tag}")

    grid = np.linspace(lo, hi, grid_n)
    verdicts = [predicate(float(f)) for f in grid]

    intervals, cases = [], []
    start = None
    for i, v in enumerate(verdicts):
        ok = _admissible(v)
        if ok and start is None:
            if i == 0:
                start = (lo, _case(v))
            else:
                _, b, _, vb = _bisect(predicate, grid[i - 1], grid[i], verdicts[i - 1], v, refine_tol)
                start = (float(b), _case(vb))
        elif not ok and start is not None:
            a, _, va, _ = _bisect(predicate, grid[i - 1], grid[i], verdicts[i - 1], v, refine_tol)
            intervals.append((start[0], float(a)))
            cases.append((start[1], _case(va)))
            start = None
    if start is not None:
        intervals.append((start[0], hi))
        cases.append((start[1], _case(verdicts[-1])))

    return AdmissibleSet(tuple(intervals), tag, grid_n, refine_tol, (lo, hi), tuple(cases))


def point_set(f: float, verdict, tag: str = "Ellipse") -> AdmissibleSet:
    """Domínio degenerado num ponto (limites elementares coincidentes)."""
    if _admissible(verdict):
        return AdmissibleSet(((f, f),), tag, 1, 0.0, (f, f), ((_case(verdict), _case(verdict)),))
    return AdmissibleSet((), tag, 1, 0.0, (f, f), ())


def bounds_of(aset: AdmissibleSet) -> SetBounds:
    if aset.is_empty:
        raise EmptySet(f"conjunto admissível ({aset.predicate_tag}) vazio: medição inconsistente ou grade grossa")
    return SetBounds(aset.intervals[0][0], aset.intervals[-1][1], aset.disconnected)
