"""Shared test oracles, independent of the implementation paths they check."""

from __future__ import annotations

import math

import numpy as np

from invman.matexpr import Binary, Const, Power, ScalarExpr, T, Unary, evaluate


def fd_derivative(f, t: float, h: float = 1e-6) -> float:
    """Central finite difference, the standard derivative oracle."""
    return (f(t + h) - f(t - h)) / (2.0 * h)


def fd_matrix_derivative(f, t: float, h: float = 1e-6) -> np.ndarray:
    return (f(t + h) - f(t - h)) / (2.0 * h)


def triple_loop_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Naive O(n^3) reference product."""
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for l in range(k):
                s += a[i, l] * b[l, j]
            out[i, j] = s
    return out


def reference_eval(text: str, t: float) -> float:
    """Independent expression evaluator: hand the text to Python itself.

    Only valid for expressions without chained '^' (associativity differs).
    """
    return float(
        eval(  # noqa: S307 - test oracle on trusted strings
            text.replace("^", "**"),
            {"__builtins__": {}},
            {"t": t, "sin": math.sin, "cos": math.cos, "exp": math.exp},
        )
    )


def random_expr(rng: np.random.Generator, depth: int) -> ScalarExpr:
    """Random expression tree of bounded depth.

    Denominators are shielded as (expr^2 + positive constant) so division is
    exercised without manufacturing poles; other singular draws (zero base
    under a negative power, exp overflow) are left in and filtered by the
    caller's finiteness guards.
    """
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return T
        return Const(round(float(rng.uniform(-3.0, 3.0)), 3))
    kind = int(rng.integers(0, 8))
    if kind == 0:
        return Binary("+", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 1:
        return Binary("-", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 2:
        return Binary("*", random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    if kind == 3:
        shield = Binary(
            "+",
            Power(random_expr(rng, depth - 1), 2),
            Const(round(float(rng.uniform(0.5, 2.0)), 3)),
        )
        return Binary("/", random_expr(rng, depth - 1), shield)
    if kind == 4:
        return Unary("neg", random_expr(rng, depth - 1))
    if kind == 5:
        return Unary(str(rng.choice(["sin", "cos"])), random_expr(rng, depth - 1))
    if kind == 6:
        return Unary("exp", random_expr(rng, depth - 1))
    return Power(random_expr(rng, depth - 1), int(rng.integers(-2, 4)))


def try_eval(expr: ScalarExpr, t: float):
    """Evaluate, returning None on poles or non-finite results."""
    from invman.errors import EvaluationError

    try:
        v = float(evaluate(expr, t))
    except EvaluationError:
        return None
    return v if math.isfinite(v) else None


def schema_paths(obj, prefix: str = "") -> list[str]:
    """Flatten a JSON payload into sorted type-annotated key paths.

    Arrays contribute a single ``[]`` segment based on their first element, so
    the result pins the schema without pinning values.
    """
    if isinstance(obj, dict):
        out: list[str] = []
        for key in sorted(obj):
            out.extend(schema_paths(obj[key], f"{prefix}{key}."))
        return out
    if isinstance(obj, list):
        if obj and isinstance(obj[0], (dict, list)):
            return schema_paths(obj[0], f"{prefix}[].")
        inner = type(obj[0]).__name__ if obj else "empty"
        return [f"{prefix.rstrip('.')}:[{inner}]"]
    return [f"{prefix.rstrip('.')}:{type(obj).__name__}"]


def random_well_conditioned_stack(rng: np.random.Generator, m: int, n: int):
    """Numeric (chart, comp_chart) pair with modest condition number.

    Built from a random orthogonal matrix (QR oracle) warmed with a mild
    shear and scaling, so the stacked inverse is trustworthy to ~1e-13.
    """
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    shear = np.eye(m)
    i, j = rng.choice(m, size=2, replace=False)
    shear[i, j] = rng.uniform(-0.5, 0.5)
    scale = np.diag(rng.uniform(0.8, 1.25, size=m))
    stack = scale @ shear @ q
    return stack[:n], stack[n:]
