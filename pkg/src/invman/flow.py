"""Numerical flows: fundamental matrices, confinement drift, conjugacy.

The integrator is classical fixed-step RK4 on the matrix equation
dY/dt = A(t) Y.  Fixed stepping keeps the error-order property tests clean
(halving h divides the error by about 16) and desk-scale dimensions make
the cost irrelevant.  Windows may run backward: t1 < t0 flips the step sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IntegrationOverflowError, PreconditionError, ShapeError
from .invariance import (
    DEFAULT_VERDICT_TOL,
    SystemSpec,
    frame_samples,
    verdicts,
)
from .matexpr import MatrixFunction

__all__ = [
    "SIDE_MAIN",
    "SIDE_COMPLEMENT",
    "FundamentalSolution",
    "integrate_fundamental",
    "integrate_states",
    "DriftResult",
    "manifold_drift",
    "ConjugacyResult",
    "conjugacy_check",
    "FlowResult",
    "run_flow",
]

SIDE_MAIN = "mn"            # launch on the n-dimensional subspace
SIDE_COMPLEMENT = "complement"


def _steps(t0: float, t1: float, h: float) -> tuple[int, float]:
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    span = t1 - t0
    if span == 0.0:
        return 0, 0.0
    n = max(1, round(abs(span) / h))
    return n, span / n


def _rk4(samples: np.ndarray, y0: np.ndarray, t0: float, h_eff: float) -> np.ndarray:
    """March y' = A(t) y with A given at half-step resolution.

    ``samples`` holds A at t0, t0+h/2, t0+h, ... (2n+1 matrices for n steps).
    """
    n = (samples.shape[0] - 1) // 2
    out = np.empty((n + 1,) + y0.shape)
    out[0] = y = np.asarray(y0, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):  # overflow raises below
        for i in range(n):
            a0, ah, a1 = samples[2 * i], samples[2 * i + 1], samples[2 * i + 2]
            k1 = a0 @ y
            k2 = ah @ (y + 0.5 * h_eff * k1)
            k3 = ah @ (y + 0.5 * h_eff * k2)
            k4 = a1 @ (y + h_eff * k3)
            y = y + (h_eff / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(y).all():
                raise IntegrationOverflowError(step=i + 1, t=t0 + (i + 1) * h_eff)
            out[i + 1] = y
    return out


def _half_grid(t0: float, n: int, h_eff: float) -> np.ndarray:
    return t0 + 0.5 * h_eff * np.arange(2 * n + 1)


def _coeff_samples(coeff: MatrixFunction, half_ts: np.ndarray) -> np.ndarray:
    return coeff.eval_grid(half_ts)


def _callable_samples(fn: Callable[[float], np.ndarray], k: int, half_ts: np.ndarray) -> np.ndarray:
    out = np.empty((half_ts.size, k, k))
    for i, t in enumerate(half_ts):
        out[i] = fn(t)
    return out


@dataclass(frozen=True, eq=False)
class FundamentalSolution:
    """Sampled fundamental matrix: identity at ts[0], one sample per step."""

    ts: np.ndarray
    matrices: np.ndarray  # (N+1, k, k)

    @property
    def final(self) -> np.ndarray:
        return self.matrices[-1]


def integrate_states(
    coeff: MatrixFunction, y0, t0: float, t1: float, h: float
) -> FundamentalSolution:
    """Integrate dY/dt = A(t) Y from an arbitrary initial matrix (or vector batch)."""
    if coeff.rows != coeff.cols:
        raise ShapeError(f"system matrix must be square, got {coeff.shape}")
    y0 = np.asarray(y0, dtype=float)
    if y0.shape[0] != coeff.rows:
        raise ShapeError(f"initial state has {y0.shape[0]} rows, system is {coeff.rows}-dimensional")
    n, h_eff = _steps(t0, t1, h)
    if n == 0:
        return FundamentalSolution(ts=np.array([t0], dtype=float), matrices=y0[None].copy())
    samples = _coeff_samples(coeff, _half_grid(t0, n, h_eff))
    mats = _rk4(samples, y0, t0, h_eff)
    ts = t0 + h_eff * np.arange(n + 1)
    return FundamentalSolution(ts=ts, matrices=mats)


def integrate_fundamental(coeff: MatrixFunction, t0: float, t1: float, h: float) -> FundamentalSolution:
    """Fundamental matrix of dY/dt = A(t) Y with Y(t0) = identity."""
    return integrate_states(coeff, np.eye(coeff.rows), t0, t1, h)


@dataclass(frozen=True, eq=False)
class DriftResult:
    """Per-sample confinement drift of trajectories launched on one side.

    ``residuals[i]`` is the worst relative off-side component over the trial
    trajectories at sample i: the norm of the component that should vanish,
    divided by the trajectory norm (so growth or decay does not mask it).
    """

    side: str
    ts: np.ndarray
    residuals: np.ndarray
    seed: int
    h: float
    trials: int

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))


def manifold_drift(
    spec: SystemSpec,
    side: str,
    h: float = 1e-3,
    trials: int = 5,
    seed: int = 42,
    t_span: tuple[float, float] = (0.0, 5.0),
) -> DriftResult:
    """Launch random trajectories on one side of the splitting and measure leakage.

    Side ``"mn"`` starts at P(t0) c and reports |(E - P(t)) y(t)| / |y(t)|;
    side ``"complement"`` starts at (E - P(t0)) c and reports |P(t) y(t)| / |y(t)|.
    """
    if side not in (SIDE_MAIN, SIDE_COMPLEMENT):
        raise ValueError(f"side must be {SIDE_MAIN!r} or {SIDE_COMPLEMENT!r}, got {side!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0, t1 = float(t_span[0]), float(t_span[1])
    n, h_eff = _steps(t0, t1, h)
    ts = t0 + h_eff * np.arange(n + 1) if n else np.array([t0])

    fs = frame_samples(spec, ts)
    proj = fs.projector  # (N+1, m, m)
    eye = np.eye(spec.m)

    rng = np.random.default_rng(seed)
    c = rng.standard_normal((spec.m, trials))
    launch = proj[0] @ c if side == SIDE_MAIN else (eye - proj[0]) @ c

    if n == 0:
        traj = launch[None]
    else:
        samples = _coeff_samples(spec.coeff, _half_grid(t0, n, h_eff))
        traj = _rk4(samples, launch, t0, h_eff)  # (N+1, m, trials)

    off = proj @ traj if side == SIDE_COMPLEMENT else (eye - proj) @ traj
    off_norm = np.linalg.norm(off, axis=1)      # (N+1, trials)
    traj_norm = np.linalg.norm(traj, axis=1)
    rel = np.where(traj_norm > 0.0, off_norm / np.maximum(traj_norm, np.finfo(float).tiny), 0.0)
    return DriftResult(
        side=side,
        ts=ts,
        residuals=np.max(rel, axis=1),
        seed=seed,
        h=h,
        trials=trials,
    )


@dataclass(frozen=True, eq=False)
class ConjugacyResult:
    """Residuals tying the full flow to the reduced flow on the subspace.

    ``embedding_residuals`` is |Y(t) C+(t0) - C+(t) X(t)|_F per sample, the
    conjugacy relation itself; ``chart_residuals`` is |X(t) - C(t) Y(t) C+(t0)|_F,
    its chart-side form.  Y and X are the sampled fundamental matrices of the
    full and reduced systems.
    """

    ts: np.ndarray
    embedding_residuals: np.ndarray
    chart_residuals: np.ndarray
    fundamental: np.ndarray  # (N+1, m, m)
    reduced: np.ndarray      # (N+1, n, n)

    @property
    def max_embedding_residual(self) -> float:
        return float(np.max(self.embedding_residuals))

    @property
    def max_chart_residual(self) -> float:
        return float(np.max(self.chart_residuals))


def conjugacy_check(
    spec: SystemSpec,
    h: float = 1e-3,
    t_span: tuple[float, float] = (0.0, 2.0),
    tol: float = DEFAULT_VERDICT_TOL,
) -> ConjugacyResult:
    """Compare the full flow against the reduced flow through the embedding.

    Requires the main-subspace invariance verdict at ``tol``: off an invariant
    subspace the reduced equation has no meaning, so the check refuses to run
    and reports the offending residual instead.
    """
    report = verdicts(spec, tol)
    if not report.main_invariant:
        raise PreconditionError(
            "conjugacy_check: the subspace is not invariant at tolerance "
            f"{tol:g} (max one-sided defect {report.max_defect_main:.3e}); "
            "comparing flows off an invariant subspace is meaningless",
            residual=report.max_defect_main,
        )

    t0, t1 = float(t_span[0]), float(t_span[1])
    n, h_eff = _steps(t0, t1, h)
    ts = t0 + h_eff * np.arange(n + 1) if n else np.array([t0])

    fund = integrate_states(spec.coeff, np.eye(spec.m), t0, t1, h).matrices
    fs = frame_samples(spec, ts)

    if n == 0:
        reduced = np.eye(spec.n)[None]
    else:
        half_ts = _half_grid(t0, n, h_eff)
        half_fs = frame_samples(spec, half_ts)
        coeff_half = spec.coeff.eval_grid(half_ts)
        reduced_samples = (half_fs.dchart + half_fs.chart @ coeff_half) @ half_fs.embedding
        reduced = _rk4(reduced_samples, np.eye(spec.n), t0, h_eff)

    e0 = fs.embedding[0]
    lhs = fund @ e0                       # (N+1, m, n)
    rhs = fs.embedding @ reduced
    embed_res = np.sqrt(np.sum((lhs - rhs) ** 2, axis=(1, 2)))
    chart_side = fs.chart @ lhs
    chart_res = np.sqrt(np.sum((reduced - chart_side) ** 2, axis=(1, 2)))

    return ConjugacyResult(
        ts=ts,
        embedding_residuals=embed_res,
        chart_residuals=chart_res,
        fundamental=fund,
        reduced=reduced,
    )


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Aggregate flow diagnostics on one window, CLI-facing.

    ``conjugacy_residuals`` holds the embedding-relation residual curve when
    the main-subspace verdict holds on the spec's grid, else None.
    """

    ts: np.ndarray
    drift_mn: np.ndarray
    drift_complement: np.ndarray
    conjugacy_residuals: Optional[np.ndarray]
    main_invariant: bool
    seed: int
    h: float
    trials: int
    window: tuple[float, float]

    def to_dict(self) -> dict:
        max_conj = (
            float(np.max(self.conjugacy_residuals))
            if self.conjugacy_residuals is not None
            else None
        )
        return {
            "window": [self.window[0], self.window[1]],
            "h": self.h,
            "seed": self.seed,
            "trials": self.trials,
            "main_invariant": self.main_invariant,
            "t": self.ts.tolist(),
            "drift_mn": self.drift_mn.tolist(),
            "drift_complement": self.drift_complement.tolist(),
            "conjugacy_residual": (
                self.conjugacy_residuals.tolist() if self.conjugacy_residuals is not None else None
            ),
            "max": {
                "drift_mn": float(np.max(self.drift_mn)),
                "drift_complement": float(np.max(self.drift_complement)),
                "conjugacy_residual": max_conj,
            },
        }

    def csv_rows(self):
        """Rows for the pinned CSV columns: t, drift_mn, drift_complement, conjugacy_residual."""
        for i, t in enumerate(self.ts):
            conj = (
                repr(float(self.conjugacy_residuals[i]))
                if self.conjugacy_residuals is not None
                else "nan"
            )
            yield [repr(float(t)), repr(float(self.drift_mn[i])),
                   repr(float(self.drift_complement[i])), conj]


def run_flow(
    spec: SystemSpec,
    h: float = 1e-3,
    trials: int = 5,
    seed: int = 42,
    t_span: tuple[float, float] = (0.0, 5.0),
    tol: float = DEFAULT_VERDICT_TOL,
) -> FlowResult:
    """Drift on both sides plus, when the subspace is invariant, the conjugacy curve."""
    mn = manifold_drift(spec, SIDE_MAIN, h=h, trials=trials, seed=seed, t_span=t_span)
    comp = manifold_drift(spec, SIDE_COMPLEMENT, h=h, trials=trials, seed=seed, t_span=t_span)
    report = verdicts(spec, tol)
    conj = None
    if report.main_invariant:
        conj = conjugacy_check(spec, h=h, t_span=t_span, tol=tol).embedding_residuals
    return FlowResult(
        ts=mn.ts,
        drift_mn=mn.residuals,
        drift_complement=comp.residuals,
        conjugacy_residuals=conj,
        main_invariant=report.main_invariant,
        seed=seed,
        h=h,
        trials=trials,
        window=(float(t_span[0]), float(t_span[1])),
    )
