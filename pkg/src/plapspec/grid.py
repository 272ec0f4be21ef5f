"""Discrete spatial calculus on uniform 1D/2D grids.

Gradient and divergence form an exact adjoint pair under homogeneous Neumann
boundary semantics: forward differences with a zero difference across the
outer boundary, and divergence defined as the negative transpose of the
gradient. Mass conservation of flows built on this pair is then structural
rather than approximate.

All operations are pure and single-threaded with a fixed reduction order, so
results are deterministic across runs.
"""

from __future__ import annotations

import numpy as np

from .errors import GridError, ParameterError

__all__ = [
    "Field",
    "VectorField",
    "gradient",
    "divergence",
    "p_laplacian",
    "PLaplacianOperator",
    "inner",
    "norm",
    "project_kernel_orthogonal",
    "gradient_p_norm",
]


def _as_spacing(spacing, ndim: int) -> tuple[float, ...]:
    if spacing is None:
        return (1.0,) * ndim
    if np.isscalar(spacing):
        spacing = (float(spacing),) * ndim
    spacing = tuple(float(h) for h in spacing)
    if len(spacing) != ndim:
        raise GridError(f"expected {ndim} spacing entries, got {len(spacing)}")
    if any(not np.isfinite(h) or h <= 0.0 for h in spacing):
        raise GridError(f"spacing must be strictly positive, got {spacing}")
    return spacing


class Field:
    """A scalar function sampled on a uniform 1D or 2D grid.

    values is a float64 array (not copied); spacing is the grid step per
    axis, default 1 (pixel units).
    """

    __slots__ = ("values", "spacing")

    def __init__(self, values, spacing=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim not in (1, 2):
            raise GridError(f"only 1D/2D grids supported, got ndim={values.ndim}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        self.values = values
        self.spacing = _as_spacing(spacing, values.ndim)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        v = 1.0
        for h in self.spacing:
            v *= h
        return v

    def with_values(self, values) -> "Field":
        """New Field on the same grid with different values."""
        return Field(values, self.spacing)

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.spacing)

    def __repr__(self) -> str:
        return f"Field(shape={self.shape}, spacing={self.spacing})"


class VectorField:
    """One component Field per spatial axis, on a common grid.

    Components follow the forward-difference staggering convention: the entry
    at the last index along its own axis is 0 (no flux across the boundary).
    """

    __slots__ = ("components",)

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise GridError("VectorField needs at least one component")
        shape = components[0].shape
        spacing = components[0].spacing
        for c in components:
            if c.shape != shape or c.spacing != spacing:
                raise GridError("VectorField components must share one grid")
        if len(components) != len(shape):
            raise GridError(
                f"expected {len(shape)} components for a {len(shape)}D grid, "
                f"got {len(components)}"
            )
        self.components = components

    @property
    def shape(self) -> tuple[int, ...]:
        return self.components[0].shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.components[0].spacing


def _require_min_extent(shape) -> None:
    if any(n < 2 for n in shape):
        raise GridError(f"each axis needs at least 2 nodes, got shape {shape}")


def gradient(u: Field) -> VectorField:
    """Forward-difference gradient with zero boundary differences."""
    _require_min_extent(u.shape)
    comps = []
    for axis, h in enumerate(u.spacing):
        g = np.zeros_like(u.values)
        src = u.values
        if axis == 0:
            np.subtract(src[1:], src[:-1], out=g[:-1])
        else:
            np.subtract(src[:, 1:], src[:, :-1], out=g[:, :-1])
        if h != 1.0:
            g /= h
        comps.append(Field(g, u.spacing))
    return VectorField(comps)


def divergence(g: VectorField) -> Field:
    """Negative adjoint of gradient: <gradient(u), g> = -<u, divergence(g)>."""
    out = np.zeros(g.shape, dtype=np.float64)
    for axis, h in enumerate(g.spacing):
        c = g.components[axis].values
        acc = np.zeros_like(out)
        if axis == 0:
            acc[0] = c[0]
            np.subtract(c[1:-1], c[:-2], out=acc[1:-1])
            acc[-1] = -c[-2]
        else:
            acc[:, 0] = c[:, 0]
            np.subtract(c[:, 1:-1], c[:, :-2], out=acc[:, 1:-1])
            acc[:, -1] = -c[:, -2]
        if h != 1.0:
            acc /= h
        out += acc
    return Field(out, g.spacing)


def _check_p(p: float) -> float:
    p = float(p)
    if not (1.0 < p <= 2.0):
        raise ParameterError(f"p must lie in (1, 2], got {p}")
    return p


class PLaplacianOperator:
    """Reusable evaluator of div(|grad u|^(p-2) grad u) on a fixed grid.

    Scratch arrays are allocated once, so repeated application inside a
    time-stepping loop does no per-step allocation. The flux is set exactly
    to 0 wherever |grad u| = 0 (the continuous limit for p > 1); there is no
    epsilon-regularization, which keeps the operator exactly
    (p-1)-homogeneous up to rounding.
    """

    def __init__(self, shape, spacing, p: float):
        self.p = _check_p(p)
        _require_min_extent(shape)
        self.shape = tuple(int(n) for n in shape)
        self.ndim = len(self.shape)
        if self.ndim not in (1, 2):
            raise GridError(f"only 1D/2D grids supported, got ndim={self.ndim}")
        self.spacing = _as_spacing(spacing, self.ndim)
        # Component buffers keep their trailing zero row/column untouched.
        self._g = [np.zeros(self.shape) for _ in range(self.ndim)]
        self._mag = np.zeros(self.shape)
        self._mob = np.zeros(self.shape)
        self._acc = np.zeros(self.shape)
        self._esum = {1: "i,i,i->", 2: "ij,ij,ij->"}[self.ndim]

    def apply(self, u: np.ndarray, out: np.ndarray, grad_pnorm_pow=None):
        """Write the operator value into out; returns out.

        When grad_pnorm_pow is a one-element array, its entry is set to
        sum(|grad u|^p) * cell_volume, i.e. the p-th power of the gradient
        p-norm, computed from the same intermediates at no extra passes.
        """
        p, mag, mob = self.p, self._mag, self._mob
        g = self._g
        if self.ndim == 1:
            (hx,) = self.spacing
            np.subtract(u[1:], u[:-1], out=g[0][:-1])
            if hx != 1.0:
                g[0] /= hx
            np.abs(g[0], out=mag)
        else:
            hx, hy = self.spacing
            np.subtract(u[1:, :], u[:-1, :], out=g[0][:-1, :])
            np.subtract(u[:, 1:], u[:, :-1], out=g[1][:, :-1])
            if hx != 1.0:
                g[0] /= hx
            if hy != 1.0:
                g[1] /= hy
            np.multiply(g[0], g[0], out=mag)
            np.multiply(g[1], g[1], out=mob)
            np.add(mag, mob, out=mag)
            np.sqrt(mag, out=mag)
        nz = mag > 0.0
        np.power(mag, p - 2.0, out=mob, where=nz)
        mob[~nz] = 0.0
        if grad_pnorm_pow is not None:
            vol = 1.0
            for h in self.spacing:
                vol *= h
            grad_pnorm_pow[0] = np.einsum(self._esum, mag, mag, mob) * vol
        out.fill(0.0)
        acc = self._acc
        for axis in range(self.ndim):
            flux = g[axis]
            np.multiply(mob, flux, out=flux)
            h = self.spacing[axis]
            if axis == 0:
                acc[0] = flux[0]
                np.subtract(flux[1:-1], flux[:-2], out=acc[1:-1])
                acc[-1] = -flux[-2]
            else:
                acc[:, 0] = flux[:, 0]
                np.subtract(flux[:, 1:-1], flux[:, :-2], out=acc[:, 1:-1])
                acc[:, -1] = -flux[:, -2]
            if h != 1.0:
                acc /= h
            out += acc
        return out


def p_laplacian(u: Field, p: float) -> Field:
    """div(|grad u|^(p-2) grad u) for p in (1, 2]."""
    op = PLaplacianOperator(u.shape, u.spacing, p)
    out = np.zeros(u.shape)
    op.apply(u.values, out)
    return Field(out, u.spacing)


def inner(u: Field, v: Field) -> float:
    """Euclidean inner product scaled by the grid cell volume."""
    if u.shape != v.shape or u.spacing != v.spacing:
        raise GridError(f"grid mismatch: {u!r} vs {v!r}")
    return float(np.sum(u.values * v.values)) * u.cell_volume


def norm(u: Field) -> float:
    return float(np.sqrt(inner(u, u)))


def project_kernel_orthogonal(u: Field) -> Field:
    """Remove the mean: projection onto the orthogonal complement of constants.

    Constants form the kernel of the Neumann p-Laplacian, so this is the
    admissible-input projection for flows and transforms.
    """
    return u.with_values(u.values - u.values.mean())


def gradient_p_norm(u: Field, p: float) -> float:
    """(sum |grad u|^p * cell_volume)^(1/p)."""
    p = float(p)
    if p <= 0.0:
        raise ParameterError(f"p must be positive, got {p}")
    comps = gradient(u).components
    sq = comps[0].values ** 2
    for c in comps[1:]:
        sq = sq + c.values**2
    mag = np.sqrt(sq)
    return float((np.sum(mag**p) * u.cell_volume) ** (1.0 / p))
