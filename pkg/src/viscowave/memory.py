"""Snapshot history and the discrete memory (convolution) terms.

The Volterra integral int_0^t k(t - s) L u(s) ds at t = N1 dt is replaced by
the rectangle sum

    dt * sum_{i=1}^{N1-1} k(t - i dt) L u(i dt),

which leaves out both i = 0 and i = N1.  ``include_right_endpoint`` adds the
i = N1 term back for users who prefer the left-point rule on (0, t].
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigError, LengthMismatch, SolverError
from .kernel import Exponential, KernelSpec, kernel_eval
from .operators import Grid, bilinear_a_eta

_INDEX_SLACK = 1e-9


class History:
    """Append-only buffers of u(i dt) and L u(i dt), i = 0, 1, ...

    Rows are stored in preallocated arrays that double in size when full, so
    ``raw`` and ``laplacian`` are cheap views.
    """

    def __init__(self, dt: float, n_nodes: int, capacity: int = 64):
        if not dt > 0:
            raise ConfigError(f"history step must be positive, got {dt}")
        self.dt = float(dt)
        self.n_nodes = int(n_nodes)
        self._raw = np.empty((max(capacity, 1), self.n_nodes))
        self._lap = np.empty_like(self._raw)
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def append(self, u, lu) -> None:
        u = np.asarray(u, dtype=float)
        lu = np.asarray(lu, dtype=float)
        if u.shape != (self.n_nodes,) or lu.shape != (self.n_nodes,):
            raise LengthMismatch(f"snapshot shapes {u.shape}, {lu.shape}; expected ({self.n_nodes},)")
        if self._len == len(self._raw):
            self._raw = np.concatenate([self._raw, np.empty_like(self._raw)])
            self._lap = np.concatenate([self._lap, np.empty_like(self._lap)])
        self._raw[self._len] = u
        self._lap[self._len] = lu
        self._len += 1

    @property
    def raw(self) -> np.ndarray:
        return self._raw[: self._len]

    @property
    def laplacian(self) -> np.ndarray:
        return self._lap[: self._len]

    def time_index(self, t: float) -> int:
        """N1 with t = N1 * dt; rejects times off the snapshot grid."""
        ratio = t / self.dt
        n1 = int(round(ratio))
        if abs(ratio - n1) > _INDEX_SLACK * max(1.0, abs(ratio)) or n1 < 0:
            raise ConfigError(f"t={t} is not a multiple of dt={self.dt}")
        return n1

    def _require(self, last_index: int) -> None:
        if self._len <= last_index:
            raise SolverError(f"history holds {self._len} snapshots, need index {last_index}")


def _weights(history: History, kernel: KernelSpec, n1: int, include_right_endpoint: bool):
    """Quadrature index range [1, stop) and weights dt * k((n1 - i) dt)."""
    stop = n1 + 1 if include_right_endpoint else n1
    if stop <= 1:
        return 1, np.empty(0)
    lags = (n1 - np.arange(1, stop)) * history.dt
    return stop, history.dt * np.atleast_1d(kernel_eval(kernel, lags))


def convolution_term(history: History, kernel: KernelSpec, t: float,
                     include_right_endpoint: bool = False) -> np.ndarray:
    """dt * sum_{i=1}^{N1-1} k(t - i dt) L u(i dt) for t = N1 dt."""
    n1 = history.time_index(t)
    stop, w = _weights(history, kernel, n1, include_right_endpoint)
    if len(w) == 0:
        return np.zeros(history.n_nodes)
    history._require(stop - 1)
    return w @ history.laplacian[1:stop]


class ExponentialConvolution:
    """O(1)-per-step evaluation of :func:`convolution_term` for a * exp(-b t).

    Keeps S_{N1} = dt * sum_{i=1}^{N1-1} a exp(-b (N1 - i) dt) L u_i and uses

        S_{N1+1} = exp(-b dt) S_{N1} + dt a exp(-b dt) L u_{N1}.

    Must be queried at consecutive time levels.  The first query may be at
    any level; it is initialised from the direct sum.
    """

    def __init__(self, kernel: KernelSpec, dt: float, include_right_endpoint: bool = False):
        if not isinstance(kernel.form, Exponential):
            raise ConfigError("ExponentialConvolution needs an exponential kernel")
        self.kernel = kernel
        self.dt = float(dt)
        self.include_right_endpoint = include_right_endpoint
        self._a = kernel.form.a
        self._decay = math.exp(-kernel.form.b * self.dt)
        self._n1: int | None = None
        self._sum: np.ndarray | None = None

    def term(self, history: History, t: float) -> np.ndarray:
        n1 = history.time_index(t)
        if self._n1 is None:
            self._sum = convolution_term(history, self.kernel, t, include_right_endpoint=False)
        elif n1 == self._n1 + 1:
            history._require(self._n1)
            if self._n1 >= 1:
                self._sum = self._decay * self._sum + (self.dt * self._a * self._decay) * history.laplacian[self._n1]
        elif n1 != self._n1:
            raise SolverError(f"exponential convolution queried at level {n1} after level {self._n1}")
        self._n1 = n1
        if self.include_right_endpoint and n1 >= 1:
            history._require(n1)
            return self._sum + self.dt * self._a * history.laplacian[n1]
        return self._sum.copy()


def convolution_term_exp(history: History, kernel: KernelSpec, t: float,
                         state: ExponentialConvolution | None = None) -> tuple[np.ndarray, ExponentialConvolution]:
    """Functional wrapper around :class:`ExponentialConvolution`.

    Pass the returned state back in on the next (consecutive) time level.
    """
    if state is None:
        state = ExponentialConvolution(kernel, history.dt)
    return state.term(history, t), state


def memory_energy_term(history: History, kernel: KernelSpec, u_now, grid: Grid, eta: float,
                       t: float, include_right_endpoint: bool = False) -> float:
    """dt * sum_{i=1}^{N1-1} k(t - i dt) ||u(i dt) - u_now||_eta^2."""
    n1 = history.time_index(t)
    stop, w = _weights(history, kernel, n1, include_right_endpoint)
    if len(w) == 0:
        return 0.0
    history._require(stop - 1)
    diff = history.raw[1:stop] - np.asarray(u_now, dtype=float)
    return float(w @ bilinear_a_eta(diff, diff, grid, eta))


def memory_cross_term(history: History, kernel: KernelSpec, u_now, v_now, grid: Grid,
                      t: float, include_right_endpoint: bool = False) -> float:
    """dt * sum_{i=1}^{N1-1} k(t - i dt) <v_now, u_now - u(i dt)> (trapezoid L2)."""
    n1 = history.time_index(t)
    stop, w = _weights(history, kernel, n1, include_right_endpoint)
    if len(w) == 0:
        return 0.0
    history._require(stop - 1)
    diff = np.asarray(u_now, dtype=float) - history.raw[1:stop]
    proj = diff @ (np.asarray(v_now, dtype=float) * grid.trapezoid_weights())
    return float(w @ proj)
