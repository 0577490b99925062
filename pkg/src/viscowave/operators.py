"""Uniform grid on [0, 1], Robin-boundary Laplacian, a_eta form and norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, LengthMismatch, NonFinite

# Tolerance on a negative a_eta(v, v) before it is treated as a bug.
_RADICAND_SLACK = 1e-12


@dataclass(frozen=True)
class Grid:
    """N uniform cells on [0, 1]; nodes x_j = j h for j = 0..N."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"grid needs an integer cell count N >= 2, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    @property
    def size(self) -> int:
        return self.n + 1

    def sample(self, fn) -> np.ndarray:
        """Nodal samples of a vectorised function of x."""
        return as_field(np.broadcast_to(fn(self.x), (self.size,)), self)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.size, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def as_field(values, grid: Grid) -> np.ndarray:
    """Validate and return ``values`` as a float nodal field on ``grid``."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.size,):
        raise LengthMismatch(f"field of shape {arr.shape} on a grid with {grid.size} nodes")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("nodal field contains non-finite values")
    return arr


def _check(u, grid: Grid) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if arr.shape[-1] != grid.size:
        raise LengthMismatch(f"field with {arr.shape[-1]} nodes on a grid with {grid.size} nodes")
    return arr


def robin_laplacian(u, grid: Grid, eta: float = 1.0) -> np.ndarray:
    """Second difference with the mixed boundary rows.

    Node 0 encodes u_x(0) = u(0):   (u_1 - (1 + h) u_0) / h^2
    Node N encodes u_x(1) + eta u(1) = 0:   (u_{N-1} - (1 + eta h) u_N) / h^2

    The boundary rows are first order.  ``u`` may carry leading batch axes.
    """
    u = _check(u, grid)
    h = grid.h
    out = np.empty_like(u)
    out[..., 1:-1] = u[..., :-2] - 2.0 * u[..., 1:-1] + u[..., 2:]
    out[..., 0] = u[..., 1] - (1.0 + h) * u[..., 0]
    out[..., -1] = u[..., -2] - (1.0 + eta * h) * u[..., -1]
    return out / (h * h)


def laplacian_matrix(grid: Grid, eta: float = 1.0) -> np.ndarray:
    """Dense matrix of :func:`robin_laplacian` (for tests and small problems)."""
    return robin_laplacian(np.eye(grid.size), grid, eta).T


def bilinear_a_eta(u, v, grid: Grid, eta: float = 1.0):
    """a_eta(u, v) = int u_x v_x + u(0) v(0) + eta u(1) v(1).

    Gradients are cell-wise forward differences, which is exact for the
    piecewise-linear interpolants of the nodal values.  Broadcasts over
    leading axes.
    """
    u = _check(u, grid)
    v = _check(v, grid)
    du = np.diff(u, axis=-1)
    dv = np.diff(v, axis=-1)
    grad = np.sum(du * dv, axis=-1) / grid.h
    return grad + u[..., 0] * v[..., 0] + eta * (u[..., -1] * v[..., -1])


def eta_norm(v, grid: Grid, eta: float = 1.0) -> float:
    sq = float(bilinear_a_eta(v, v, grid, eta))
    if sq < -_RADICAND_SLACK:
        raise ArithmeticError(f"negative a_eta(v, v) = {sq}")
    return math.sqrt(max(sq, 0.0))


def inner_L2(u, v, grid: Grid):
    """Trapezoid-rule L2 inner product; broadcasts over leading axes."""
    u = _check(u, grid)
    v = _check(v, grid)
    return np.sum(u * v * grid.trapezoid_weights(), axis=-1)


def norm_1(v, grid: Grid) -> float:
    v = _check(v, grid)
    grad_sq = float(np.sum(np.diff(v) ** 2)) / grid.h
    return math.sqrt(v[0] ** 2 + grad_sq)


def norm_L2(v, grid: Grid) -> float:
    return math.sqrt(float(inner_L2(v, v, grid)))


def norm_Lp(v, grid: Grid, p: float) -> float:
    if p < 2:
        raise ConfigError(f"norm_Lp needs p >= 2, got {p}")
    v = _check(v, grid)
    return float(np.sum(np.abs(v) ** p * grid.trapezoid_weights())) ** (1.0 / p)


def norm_H1(v, grid: Grid) -> float:
    """Discrete (||v||^2 + ||v_x||^2)^(1/2) with trapezoid mass and forward-difference gradient."""
    v = _check(v, grid)
    grad_sq = float(np.sum(np.diff(v) ** 2)) / grid.h
    return math.sqrt(float(inner_L2(v, v, grid)) + grad_sq)


def max_norm_check(v, grid: Grid) -> tuple[float, float]:
    """Return (max|v|, sqrt(2) * ||v||_1) for the sup-norm embedding diagnostic."""
    v = _check(v, grid)
    return float(np.max(np.abs(v))), math.sqrt(2.0) * norm_1(v, grid)


def psi_q(z, q: float):
    """|z|^(q-2) z, elementwise; the identity for q = 2."""
    if q < 2:
        raise ConfigError(f"psi_q needs q >= 2, got {q}")
    z = np.asarray(z, dtype=float)
    if q == 2:
        out = z.copy()
    elif q == 4:
        out = z * z * z
    else:
        out = np.abs(z) ** (q - 2) * z
    return float(out) if out.ndim == 0 else out
