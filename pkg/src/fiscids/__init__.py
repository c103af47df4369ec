"""Fixed-initial-state constant-input systems  z' = F(z) xi,  y = h(z(1)).

Formulas are lifted to rational systems by differential closure, then
brought to polynomial and quadratic form; the integrator and verification
harness check that every representation reproduces the formula.
"""

from .errors import (
    BasePointDomainError,
    Blowup,
    BracketFailure,
    ClassError,
    ClosureCapExceeded,
    DenominatorVanishesAtBase,
    DomainError,
    ExprSyntaxError,
    FiscidsError,
    IntegrationError,
    MaxStepsExceeded,
    SchemaError,
    StepUnderflow,
    UnboundVariable,
    UnknownIdentifier,
    UnsupportedFunction,
)
from .calculus import as_rational, differentiate, evaluate
from .expr import VarId
from .integrate import IntegrationConfig, Trajectory, integrate, output_at, solve_batch
from .lift import lift
from .model import (
    FiscidsSystem,
    SystemClass,
    classify,
    deserialize,
    dumps,
    load,
    loads,
    save,
    serialize,
    trivial_representation,
    validate_class,
)
from .parse import parse
from .pipeline import build, transform
from .poly import Poly, RationalFn, divisor_closure, normalize_rational
from .polynomialize import r_to_p
from .quadratize import p_to_q
from .verify import ErrorReport, GridSpec, cross_compare, grid_compare, snapshot, tt_F, tt_G, tt_oracle

__version__ = "0.1.0"
