"""Nonlinear eigenfunctions of the p-Laplacian: generation and certification.

An eigenpair (phi, lam) satisfies div(|grad phi|^(p-2) grad phi) = lam * phi
with lam <= 0. Certification is by the recorded relative residual, not by
how the pair was produced: generation alternates short flow evolution with
renormalization (the asymptotic flow profile is an eigenfunction), shrinking
the time step in stages to push the residual down, but only the residual
certificate carries correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, ParameterError
from .grid import (
    Field,
    PLaplacianOperator,
    inner,
    norm,
    p_laplacian,
    project_kernel_orthogonal,
)

__all__ = [
    "EigenPair",
    "EigenConfig",
    "rayleigh_lambda",
    "residual",
    "generate_eigenfunction",
    "analytic_catalog",
    "tile_to_2d",
    "rescale_contrast",
]


@dataclass(frozen=True)
class EigenPair:
    """A certified (or best-effort) eigenfunction with its certificate.

    phi is unit-norm and zero-mean; residual is |p_laplacian(phi) - lam*phi|
    relative to |lam|; provenance records whether the pair came from a
    closed form or from the generation iteration.
    """

    phi: Field
    lam: float
    p: float
    residual: float
    provenance: str
    converged: bool = True

    def __post_init__(self):
        if self.provenance not in ("analytic", "generated"):
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        if self.lam > 0.0:
            raise ParameterError(f"eigenvalue must be non-positive, got {self.lam}")
        if abs(norm(self.phi) - 1.0) > 1e-12:
            raise ParameterError("eigenfunction must be unit norm")
        if abs(float(self.phi.values.mean())) > 1e-12:
            raise ParameterError("eigenfunction must have zero mean")


@dataclass(frozen=True)
class EigenConfig:
    """Budget and tolerances for generate_eigenfunction.

    The iteration runs in stages: the first at dt, each later stage at
    shrink times the previous step. A stage ends when the shape change per
    cycle drops below shape_tol scaled by dt_stage/dt (the change per cycle
    is proportional to the step), or when its cycle budget runs out. The
    ladder stops early once target_residual is reached.
    """

    dt: float = 2e-3
    stages: int = 6
    shrink: float = 0.25
    steps_per_cycle: int = 200
    max_cycles: int = 2000
    polish_cycles: int = 400
    shape_tol: float = 1e-6
    residual_tol: float = 5e-2
    target_residual: float = 1e-4

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not (0.0 < self.shrink < 1.0):
            raise ParameterError(f"shrink must lie in (0, 1), got {self.shrink}")
        if min(self.stages, self.steps_per_cycle, self.max_cycles, self.polish_cycles) < 1:
            raise ParameterError("stage and cycle budgets must be positive")


def rayleigh_lambda(phi: Field, p: float) -> float:
    """<p_laplacian(phi), phi> / <phi, phi>: the least-squares eigenvalue."""
    denom = inner(phi, phi)
    if denom == 0.0:
        raise DegenerateFieldError("Rayleigh quotient of the zero field")
    return inner(p_laplacian(phi, p), phi) / denom


def residual(phi: Field, lam: float, p: float) -> float:
    """|p_laplacian(phi) - lam*phi| / (|lam| * |phi|)."""
    lam = float(lam)
    if lam == 0.0:
        raise DegenerateFieldError("residual undefined for lam = 0")
    nphi = norm(phi)
    if nphi == 0.0:
        raise DegenerateFieldError("residual undefined for the zero field")
    r = p_laplacian(phi, p).values - lam * phi.values
    return norm(phi.with_values(r)) / (abs(lam) * nphi)


def _normalize(values: np.ndarray, vol: float):
    values = values - values.mean()
    n = math.sqrt(float(np.sum(values * values)) * vol)
    return values, n


def generate_eigenfunction(seed: Field, p: float, cfg: EigenConfig | None = None) -> EigenPair:
    """Flow-renormalization iteration from a seed field.

    Returns the best pair found; converged reflects whether the shape change
    criterion and the residual_tol certificate were both met. A seed that is
    constant (a kernel element) is rejected.
    """
    if cfg is None:
        cfg = EigenConfig()
    if not (1.0 < float(p) <= 2.0):
        raise ParameterError(f"p must lie in (1, 2], got {p}")
    vol = seed.cell_volume
    v, n0 = _normalize(seed.values.astype(np.float64), vol)
    if n0 == 0.0:
        raise DegenerateFieldError("seed is constant: no eigenfunction to extract")
    v /= n0

    op = PLaplacianOperator(seed.shape, seed.spacing, p)
    du = np.zeros_like(v)
    best = None  # (values, lam, res, exit_diff)
    degenerate = False

    for stage in range(cfg.stages):
        dt_s = cfg.dt * cfg.shrink**stage
        budget = cfg.max_cycles if stage == 0 else cfg.polish_cycles
        retries = 0
        diff = math.inf
        cyc = 0
        while cyc < budget:
            cyc += 1
            prev = v.copy()
            with np.errstate(over="ignore", invalid="ignore"):
                for _ in range(cfg.steps_per_cycle):
                    op.apply(v, du)
                    np.multiply(du, dt_s, out=du)
                    np.add(v, du, out=v)
            peak = float(np.max(np.abs(v))) if v.size else 0.0
            if not math.isfinite(peak) or peak > 1e6:
                v = prev
                dt_s *= 0.5
                retries += 1
                if retries > 60:
                    break
                continue
            v, nv = _normalize(v, vol)
            if nv == 0.0:
                degenerate = True
                break
            v /= nv
            diff = math.sqrt(float(np.sum((v - prev) ** 2)) * vol)
            if diff <= cfg.shape_tol * (dt_s / cfg.dt):
                break
        if degenerate:
            break
        phi = Field(v.copy(), seed.spacing)
        lam = rayleigh_lambda(phi, p)
        res = residual(phi, lam, p) if lam != 0.0 else math.inf
        if best is None or res < best[2]:
            best = (phi.values, lam, res, diff)
        if best[2] <= cfg.target_residual:
            break

    if best is None:
        raise DegenerateFieldError("flow collapsed before any candidate was formed")
    values, lam, res, exit_diff = best
    values, nv = _normalize(values, vol)
    values /= nv
    converged = exit_diff <= cfg.shape_tol and res <= cfg.residual_tol
    return EigenPair(
        phi=Field(values, seed.spacing),
        lam=lam,
        p=float(p),
        residual=res,
        provenance="generated",
        converged=bool(converged),
    )


def analytic_catalog(kind: str, n: int, half_periods: int = 1, spacing: float = 1.0) -> EigenPair:
    """Closed-form 1D reference shapes.

    cosine_p2: the exact eigenvector of this discrete Neumann Laplacian,
    cos(k*pi*(j+1/2)/n) with eigenvalue -(4/h^2) sin^2(k*pi/(2n)), the
    continuum -(k*pi/(n*h))^2 in the fine-grid limit.

    step_p1_reference: the zero-mean two-level step, the limiting shape as
    p drops to 1. It is a reference field only: the spatial operator here
    requires p > 1, so no residual can be evaluated (recorded as inf,
    converged False); its lam is the 1D two-level decay rate -2/sqrt(n*h).
    """
    n = int(n)
    if n < 2:
        raise ParameterError(f"need at least 2 nodes, got {n}")
    h = float(spacing)
    if kind == "cosine_p2":
        k = int(half_periods)
        if not (1 <= k < n):
            raise ParameterError(f"half_periods must lie in [1, {n - 1}], got {k}")
        x = (np.arange(n) + 0.5) * (math.pi * k / n)
        vals = np.cos(x)
        vals, nv = _normalize(vals, h)
        vals /= nv
        lam = -(4.0 / h**2) * math.sin(math.pi * k / (2 * n)) ** 2
        phi = Field(vals, (h,))
        return EigenPair(
            phi=phi,
            lam=lam,
            p=2.0,
            residual=residual(phi, lam, 2.0),
            provenance="analytic",
            converged=True,
        )
    if kind == "step_p1_reference":
        vals = np.ones(n)
        vals[: n // 2] = -1.0
        vals, nv = _normalize(vals, h)
        vals /= nv
        return EigenPair(
            phi=Field(vals, (h,)),
            lam=-2.0 / math.sqrt(n * h),
            p=1.0,
            residual=math.inf,
            provenance="analytic",
            converged=False,
        )
    raise ParameterError(f"unknown catalog kind {kind!r}")


def tile_to_2d(pair: EigenPair, n_transverse: int) -> EigenPair:
    """Extend a 1D eigenfunction to 2D by constant tiling along a new axis.

    The gradient along the new axis is zero, so the eigen-equation structure
    is preserved row by row; lam and the residual are recomputed honestly on
    the tiled field (the eigenvalue rescales through the renormalization).
    """
    if pair.phi.ndim != 1:
        raise ParameterError("tile_to_2d needs a 1D eigenfunction")
    n_transverse = int(n_transverse)
    if n_transverse < 2:
        raise ParameterError(f"need at least 2 transverse nodes, got {n_transverse}")
    h = pair.phi.spacing[0]
    vals = np.tile(pair.phi.values[:, None], (1, n_transverse))
    vol = h * h
    vals, nv = _normalize(vals, vol)
    vals /= nv
    phi = Field(vals, (h, h))
    lam = rayleigh_lambda(phi, pair.p)
    res = residual(phi, lam, pair.p)
    return EigenPair(
        phi=phi,
        lam=lam,
        p=pair.p,
        residual=res,
        provenance=pair.provenance,
        converged=pair.converged and res <= 5e-2,
    )


def rescale_contrast(pair: EigenPair, lam_target: float) -> Field:
    """Scaled copy c*phi whose Rayleigh eigenvalue is lam_target.

    Homogeneity makes the eigenvalue of c*phi equal c^(p-2)*lam, so
    c = (lam_target/lam)^(1/(p-2)). Requires p < 2 (at p = 2 the eigenvalue
    is scale-invariant) and both eigenvalues strictly negative.
    """
    lam_target = float(lam_target)
    if lam_target >= 0.0 or pair.lam >= 0.0:
        raise ParameterError("contrast rescaling needs strictly negative eigenvalues")
    if pair.p >= 2.0:
        raise ParameterError("eigenvalue is scale-invariant at p = 2")
    c = (lam_target / pair.lam) ** (1.0 / (pair.p - 2.0))
    return pair.phi.with_values(c * pair.phi.values)
