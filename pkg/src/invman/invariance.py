"""Invariance verdicts for a time-dependent subspace of dy/dt = A(t) y.

The drifting subspace is presented by a chart C(t) (n x m, full row rank).
Its pseudoinverse C+(t) embeds coordinates back into R^m and defines the
projector P(t) = C+(t) C(t).  The single object everything here revolves
around is the defect operator

    defect(t) = dP/dt + P A - A P.

Vanishing patterns of the defect decide invariance:

* ``defect == 0`` on the grid: the subspace and its complement are both
  invariant (joint verdict);
* ``defect @ P == 0``: the n-dimensional subspace alone is invariant, and
  the dynamics restrict to dx/dt = R(t) x with R = (dC/dt + C A) C+;
* ``defect @ (E - P) == 0``: the complement lies in the kernel of the
  defect, the necessary condition for the complement to be invariant.

When no complementary chart is supplied, C+ is the Moore-Penrose right
inverse; results then depend on that canonical choice.  Supplying a
complementary chart routes C+ through the stacked block inverse instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import (
    RankDeficiencyError,
    ShapeError,
    SingularMatrixError,
)
from .matexpr import MatrixFunction

__all__ = [
    "DEFAULT_GRID",
    "DEFAULT_VERDICT_TOL",
    "SystemSpec",
    "FrameSamples",
    "frame_samples",
    "projector_derivative",
    "invariance_defect",
    "reduced_matrix",
    "InvarianceReport",
    "verdicts",
]

DEFAULT_VERDICT_TOL = 1e-8


def DEFAULT_GRID() -> np.ndarray:
    return np.linspace(0.0, 5.0, 201)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A linear time-varying system together with the chart of a candidate subspace."""

    coeff: MatrixFunction                       # m x m system matrix A(t)
    chart: MatrixFunction                       # n x m, full row rank on the grid
    comp_chart: Optional[MatrixFunction] = None  # p x m with p = m - n
    t_grid: np.ndarray = field(default_factory=DEFAULT_GRID)

    def __post_init__(self):
        if self.coeff.rows != self.coeff.cols:
            raise ShapeError(f"system matrix must be square, got {self.coeff.shape}")
        m = self.coeff.rows
        n = self.chart.rows
        if self.chart.cols != m:
            raise ShapeError(f"chart is {self.chart.shape}, expected columns {m}")
        if not 0 < n < m:
            raise ShapeError(f"chart must have between 1 and {m - 1} rows, got {n}")
        if self.comp_chart is not None and self.comp_chart.shape != (m - n, m):
            raise ShapeError(
                f"complementary chart is {self.comp_chart.shape}, expected {(m - n, m)}"
            )
        grid = np.asarray(self.t_grid, dtype=float).reshape(-1)
        if grid.size < 1:
            raise ValueError("t_grid must contain at least one point")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", grid)

    @property
    def m(self) -> int:
        return self.coeff.rows

    @property
    def n(self) -> int:
        return self.chart.rows


@dataclass(frozen=True, eq=False)
class FrameSamples:
    """Chart, embedding, and their derivatives sampled over a time grid."""

    ts: np.ndarray           # (N,)
    chart: np.ndarray        # (N, n, m)
    dchart: np.ndarray       # (N, n, m)
    embedding: np.ndarray    # (N, m, n)
    dembedding: np.ndarray   # (N, m, n)

    @property
    def projector(self) -> np.ndarray:
        return self.embedding @ self.chart

    @property
    def dprojector(self) -> np.ndarray:
        return self.dembedding @ self.chart + self.embedding @ self.dchart


def frame_samples(spec: SystemSpec, ts, pivot_tol: float = linalg.DEFAULT_TOL) -> FrameSamples:
    """Sample the chart and its embedding (with exact derivatives) over ``ts``.

    Rank loss of the chart, or singularity of the stacked frame, is reported
    with the offending time point.
    """
    ts = np.asarray(ts, dtype=float).reshape(-1)
    n = spec.n
    chart_g = spec.chart.eval_grid(ts)
    dchart_g = spec.chart.derivative().eval_grid(ts)
    embed_g = np.empty((ts.size, spec.m, n))
    dembed_g = np.empty_like(embed_g)

    if spec.comp_chart is None:
        for i, t in enumerate(ts):
            try:
                embed_g[i] = linalg.right_pseudoinverse(chart_g[i], pivot_tol)
                dembed_g[i] = linalg.right_pseudoinverse_derivative(
                    chart_g[i], dchart_g[i], pivot_tol
                )
            except RankDeficiencyError as exc:
                raise RankDeficiencyError(f"chart loses full row rank at t={t!r}: {exc}") from exc
    else:
        comp_g = spec.comp_chart.eval_grid(ts)
        dcomp_g = spec.comp_chart.derivative().eval_grid(ts)
        for i, t in enumerate(ts):
            stack = np.vstack([chart_g[i], comp_g[i]])
            try:
                inv = linalg.invert(stack, pivot_tol)
            except SingularMatrixError as exc:
                raise SingularMatrixError(f"stacked frame is singular at t={t!r}: {exc}") from exc
            dstack = np.vstack([dchart_g[i], dcomp_g[i]])
            dinv = -inv @ dstack @ inv
            embed_g[i] = inv[:, :n]
            dembed_g[i] = dinv[:, :n]
    return FrameSamples(ts=ts, chart=chart_g, dchart=dchart_g, embedding=embed_g, dembedding=dembed_g)


def projector_derivative(spec: SystemSpec, t: float) -> np.ndarray:
    """Exact dP/dt at ``t`` via symbolic chart derivatives and the closed-form
    derivative of the pseudoinverse (Moore-Penrose or stacked-inverse route)."""
    fs = frame_samples(spec, [t])
    return fs.dprojector[0]


def invariance_defect(spec: SystemSpec, t: float) -> np.ndarray:
    """The defect matrix dP/dt + P A - A P at ``t``."""
    fs = frame_samples(spec, [t])
    proj = fs.projector[0]
    dproj = fs.dprojector[0]
    a = spec.coeff.eval(t)
    return dproj + proj @ a - a @ proj


def reduced_matrix(spec: SystemSpec, t: float) -> np.ndarray:
    """Coefficient matrix R(t) = (dC/dt + C A) C+ of the reduced n-dimensional flow."""
    fs = frame_samples(spec, [t])
    a = spec.coeff.eval(t)
    return (fs.dchart[0] + fs.chart[0] @ a) @ fs.embedding[0]


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    """Residual curves of the defect operator over the grid, plus verdicts.

    ``joint_invariant`` implies the two one-sided verdicts by construction:
    a vanishing defect subsumes both one-sided conditions, so near-threshold
    rounding can never produce an inconsistent report.
    """

    t_grid: np.ndarray
    defect: np.ndarray             # |defect|_F per grid point
    defect_main: np.ndarray        # |defect @ P|_F
    defect_complement: np.ndarray  # |defect @ (E - P)|_F
    defect_embedding: np.ndarray   # |defect @ C+|_F (equivalent one-sided form)
    tolerance: float
    joint_invariant: bool
    main_invariant: bool
    complement_kernel_condition: bool

    @property
    def max_defect(self) -> float:
        return float(np.max(self.defect))

    @property
    def max_defect_main(self) -> float:
        return float(np.max(self.defect_main))

    @property
    def max_defect_complement(self) -> float:
        return float(np.max(self.defect_complement))

    @property
    def max_defect_embedding(self) -> float:
        return float(np.max(self.defect_embedding))

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "t": self.t_grid.tolist(),
            "residuals": {
                "defect": self.defect.tolist(),
                "defect_main": self.defect_main.tolist(),
                "defect_complement": self.defect_complement.tolist(),
                "defect_embedding": self.defect_embedding.tolist(),
            },
            "max_residuals": {
                "defect": self.max_defect,
                "defect_main": self.max_defect_main,
                "defect_complement": self.max_defect_complement,
                "defect_embedding": self.max_defect_embedding,
            },
            "verdicts": {
                "joint_invariant": self.joint_invariant,
                "main_invariant": self.main_invariant,
                "complement_kernel_condition": self.complement_kernel_condition,
            },
        }


def _batch_frobenius(stack: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(stack * stack, axis=(1, 2)))


def verdicts(spec: SystemSpec, tol: float = DEFAULT_VERDICT_TOL) -> InvarianceReport:
    """Evaluate the defect operator over the spec's grid and render verdicts.

    Each verdict compares the max-over-grid Frobenius norm of the relevant
    residual against ``tol``.  The grid is a sampled stand-in for "for all t";
    nothing is certified between grid points.
    """
    if tol <= 0:
        raise ValueError("verdicts: tolerance must be positive")
    grid = spec.t_grid
    fs = frame_samples(spec, grid)
    coeff_g = spec.coeff.eval_grid(grid)
    proj = fs.projector
    defect = fs.dprojector + proj @ coeff_g - coeff_g @ proj

    eye = np.eye(spec.m)
    norm_defect = _batch_frobenius(defect)
    norm_main = _batch_frobenius(defect @ proj)
    norm_comp = _batch_frobenius(defect @ (eye - proj))
    norm_embed = _batch_frobenius(defect @ fs.embedding)

    joint = bool(np.max(norm_defect) <= tol)
    main = joint or bool(np.max(norm_main) <= tol)
    comp = joint or bool(np.max(norm_comp) <= tol)

    return InvarianceReport(
        t_grid=grid,
        defect=norm_defect,
        defect_main=norm_main,
        defect_complement=norm_comp,
        defect_embedding=norm_embed,
        tolerance=float(tol),
        joint_invariant=joint,
        main_invariant=main,
        complement_kernel_condition=comp,
    )
