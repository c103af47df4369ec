"""Exception hierarchy shared by every stage of the pipeline."""


class FiscidsError(Exception):
    """Base class for all pipeline errors."""


class ExprSyntaxError(FiscidsError):
    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"syntax error at position {position}: {message}")


class UnknownIdentifier(FiscidsError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown identifier {name!r}")


class UnsupportedFunction(FiscidsError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"unsupported function {kind!r}")


class DomainError(FiscidsError, ArithmeticError):
    def __init__(self, node, reason: str = "argument outside domain"):
        self.node = node
        self.reason = reason
        super().__init__(reason if node is None else f"{reason}: {node}")


class UnboundVariable(FiscidsError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")

    def __str__(self):
        return self.args[0]


class AmbientMismatch(FiscidsError, ValueError):
    pass


class ZeroDenominator(FiscidsError, ZeroDivisionError):
    pass


class SchemaError(FiscidsError, ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class ClassError(FiscidsError, ValueError):
    pass


class DenominatorVanishesAtBase(FiscidsError):
    def __init__(self, index: int, denominator=None):
        self.index = index
        self.denominator = denominator
        super().__init__(f"denominator {index} ({denominator}) vanishes at the initial state")


class BasePointDomainError(FiscidsError):
    def __init__(self, state: str, reason: str):
        self.state = state
        self.reason = reason
        super().__init__(f"state {state} undefined at the base point: {reason}")


class ClosureCapExceeded(FiscidsError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"differential closure needs more than {cap} states")


class IntegrationError(FiscidsError):
    """Raised when a trajectory cannot be carried to t = 1."""

    def __init__(self, t: float, message: str):
        self.t = t
        super().__init__(f"{message} at t={t!r}")


class Blowup(IntegrationError):
    def __init__(self, t: float):
        super().__init__(t, "state left the representable region")


class StepUnderflow(IntegrationError):
    def __init__(self, t: float):
        super().__init__(t, "step size underflow")


class MaxStepsExceeded(IntegrationError):
    def __init__(self, t: float):
        super().__init__(t, "maximum number of steps exceeded")


class BracketFailure(FiscidsError):
    pass
