"""liemap: symmetry-driven mappings between differential polynomial systems."""

from .kernel import (
    Atom,
    DepthExceeded,
    DivisionByZeroExpr,
    Expr,
    FunctionSignature,
    JetVar,
    KernelError,
    SolvedContext,
    cos,
    exp,
    fn,
    ln,
    normalize,
    partial,
    reduce_expr,
    sin,
    sqrt,
    substitute,
    total_derivative,
)

__version__ = "0.1.0"
