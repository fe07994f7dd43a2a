# errors.py
# Hierarquia de erros do voltbound. Cada família carrega o exit code usado pelo CLI:
#   1 = configuração / IO, 2 = degenerescência dos dados, 3 = falha numérica.


class VoltboundError(Exception):
    exit_code = 3


# ===================== Configuração (exit 1) =====================

class ConfigError(VoltboundError):
    exit_code = 1


# ===================== Degenerescências (exit 2) =====================

class DegeneracyError(VoltboundError):
    exit_code = 2


class BetaZero(DegeneracyError):
    """Re σ1·Im σ2 − Im σ1·Re σ2 = 0: o sistema de potências não tem solução única."""


class EtaDegenerate(DegeneracyError):
    """O campo se anula em uma das fases (η^(α) ≤ tolerância)."""

    def __init__(self, message: str, phase: int | None = None):
        super().__init__(message)
        self.phase = phase


class EqualConductivities(DegeneracyError):
    pass


class EqualModuli(DegeneracyError):
    """|σ1| = |σ2|: B12 não é recuperável das medições rotacionais."""


class MissingRotData(DegeneracyError):
    pass


class InvalidRadii(DegeneracyError):
    pass


# ===================== Numéricos (exit 3) =====================

class NumericalError(VoltboundError):
    exit_code = 3


class SingularTransmission(NumericalError):
    pass


class NonConservative(NumericalError):
    """∮ J·n não fecha em zero: traço inconsistente."""


class OrientationError(NumericalError):
    pass


class EmptyDomain(NumericalError):
    pass


class EmptySet(NumericalError):
    pass


class OrderingViolation(NumericalError):
    pass
