"""Look-ahead kernels and the nonlocal density they produce.

The nonlocal density at x is the weighted downstream mass

    rho_tilde(x) = int_0^inf w(z) rho(x + z) dz,

and drivers are slowed by the factor exp(-rho_tilde). Integrals use the
trapezoidal rule on the cell-centre grid. For the uniform kernel w = 1 the
integral is a suffix sum, computed in O(N), and d(rho_tilde)/dx = -rho
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, TruncatedSupportError

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """Non-negative, non-increasing weight on [0, inf).

    ``cutoff`` is the support length (``math.inf`` for the uniform kernel).
    ``dw`` is the derivative on (0, cutoff); a jump of the weight at the
    cutoff is accounted for separately in :func:`interaction_integral`.
    """

    kind: str
    w0: float
    cutoff: float
    _w: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _dw: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def w(self, z):
        z = np.asarray(z, dtype=float)
        out = np.asarray(self._w(z), dtype=float) + np.zeros_like(z)
        return np.where((z >= 0.0) & (z <= self.cutoff), out, 0.0)

    def dw(self, z):
        if self._dw is None:
            raise InvalidParameterError(f"kernel {self.kind!r} has no derivative")
        z = np.asarray(z, dtype=float)
        out = np.asarray(self._dw(z), dtype=float) + np.zeros_like(z)
        return np.where((z >= 0.0) & (z < self.cutoff), out, 0.0)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def is_monotone(self, n: int = 1000, zmax: float = 50.0) -> bool:
        zmax = min(zmax, self.cutoff) if math.isfinite(self.cutoff) else zmax
        z = np.linspace(0.0, zmax, n)
        vals = self.w(z)
        return bool(np.all(vals >= 0.0) and np.all(np.diff(vals) <= 1e-14))


def uniform_kernel() -> Kernel:
    return Kernel(
        "uniform", 1.0, math.inf,
        lambda z: np.ones_like(z), lambda z: np.zeros_like(z),
    )


def zero_kernel() -> Kernel:
    """w = 0: switches the look-ahead off (slowdown identically 1)."""
    return Kernel(
        "zero", 0.0, 0.0, lambda z: np.zeros_like(z), lambda z: np.zeros_like(z)
    )


def truncated_exponential_kernel(
    eps: float, cutoff: float = math.inf, amplitude: float = 1.0
) -> Kernel:
    """w(z) = amplitude * exp(-z / eps) on [0, cutoff]."""
    if eps <= 0.0 or amplitude < 0.0 or cutoff <= 0.0:
        raise InvalidParameterError("need eps > 0, cutoff > 0, amplitude >= 0")
    return Kernel(
        "truncated-exponential",
        float(amplitude),
        float(cutoff),
        lambda z: amplitude * np.exp(-z / eps),
        lambda z: -(amplitude / eps) * np.exp(-z / eps),
    )


def custom_kernel(w, dw=None, cutoff: float = math.inf) -> Kernel:
    k = Kernel("custom", float(np.asarray(w(np.zeros(1)))[0]), float(cutoff), w, dw)
    if not k.is_monotone():
        raise InvalidParameterError("kernel must be non-negative and non-increasing")
    return k


@dataclass(frozen=True)
class NonlocalFields:
    rho_tilde: np.ndarray
    slowdown: np.ndarray
    d_rho_tilde_dx: np.ndarray


def trapezoid_suffix(values: np.ndarray, dx: float) -> np.ndarray:
    """out[i] = trapezoidal integral of ``values`` from cell i to the last cell."""
    seg = 0.5 * dx * (values[:-1] + values[1:])
    out = np.zeros_like(values, dtype=float)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def trapezoid_prefix(values: np.ndarray, dx: float) -> np.ndarray:
    """out[i] = trapezoidal integral of ``values`` from the first cell to cell i."""
    seg = 0.5 * dx * (values[:-1] + values[1:])
    out = np.zeros_like(values, dtype=float)
    out[1:] = np.cumsum(seg)
    return out


def _windowed(rho: np.ndarray, kernel: Kernel, dx: float) -> np.ndarray:
    n = rho.size
    K = n - 1 if not math.isfinite(kernel.cutoff) else min(n - 1, int(math.floor(kernel.cutoff / dx + 1e-12)))
    weights = kernel.w(dx * np.arange(K + 1))
    weights[0] *= 0.5
    weights[K] *= 0.5
    padded = np.concatenate([rho, np.zeros(K)])
    # correlate: out[i] = sum_k weights[k] * rho[i + k]
    out = np.correlate(padded, weights, mode="valid")[:n]
    return dx * out


def check_support(rho: np.ndarray, tol: float = SUPPORT_TOL, where: str = "right") -> None:
    edges = {"right": rho[-1:], "left": rho[:1], "both": np.r_[rho[:1], rho[-1:]]}[where]
    if np.any(np.abs(edges) > tol):
        raise TruncatedSupportError(
            f"density {float(np.max(np.abs(edges))):.3e} at the {where} boundary "
            f"exceeds {tol:.0e}; enlarge the domain"
        )


def compute_rho_tilde(rho, kernel: Kernel, grid, check: bool = True) -> NonlocalFields:
    """Nonlocal density, slowdown factor and d(rho_tilde)/dx on ``grid``."""
    rho = np.asarray(rho, dtype=float)
    dx = grid.dx
    if kernel.is_zero:
        zeros = np.zeros_like(rho)
        return NonlocalFields(zeros, np.ones_like(rho), zeros.copy())
    if check:
        check_support(rho)
    if kernel.kind == "uniform":
        rt = trapezoid_suffix(rho, dx)
        drt = -rho.copy()
    else:
        rt = _windowed(rho, kernel, dx)
        drt = np.gradient(rt, dx, edge_order=2)
    return NonlocalFields(rt, np.exp(-rt), drt)


def nonlocal_invariants(fields: NonlocalFields, rho, kernel: Kernel, grid) -> dict:
    """Check the a-priori bounds 0 <= rho_tilde <= m w(0) and exp(-m w(0)) <= slowdown <= 1."""
    rho = np.asarray(rho, dtype=float)
    tol = 1e-8 + 10.0 * grid.dx**2
    m = float(trapezoid_suffix(rho, grid.dx)[0])
    cap = m * kernel.w0
    out = {
        "rho_tilde_bounds": bool(
            np.all(fields.rho_tilde >= -tol) and np.all(fields.rho_tilde <= cap + tol)
        ),
        "slowdown_bounds": bool(
            np.all(fields.slowdown >= math.exp(-cap) - tol)
            and np.all(fields.slowdown <= 1.0 + tol)
        ),
    }
    if kernel.kind == "uniform":
        out["derivative_identity"] = bool(
            np.max(np.abs(fields.d_rho_tilde_dx + rho)) <= tol
        )
    return out


def interaction_integral(rho, u, kernel: Kernel, grid) -> np.ndarray:
    """int_0^inf w'(z) rho(x+z) (u(x+z) - u(x)) dz per cell.

    This is the forcing in the velocity equation along characteristics. It is
    non-positive wherever u attains a running maximum over the look-ahead
    window, which is the mechanism behind the bound u <= 1.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    n = rho.size
    if kernel.is_zero or kernel.kind == "uniform":
        return np.zeros(n)
    dx = grid.dx
    K = n - 1 if not math.isfinite(kernel.cutoff) else min(n - 1, int(math.floor(kernel.cutoff / dx + 1e-12)))
    z = dx * np.arange(K + 1)
    dw = kernel.dw(z)
    tw = np.full(K + 1, dx)
    tw[0] *= 0.5
    tw[K] *= 0.5
    coef = tw * dw
    rho_p = np.concatenate([rho, np.zeros(K)])
    ru_p = np.concatenate([rho * u, np.zeros(K)])
    s_ru = np.correlate(ru_p, coef, mode="valid")[:n]
    s_r = np.correlate(rho_p, coef, mode="valid")[:n]
    out = s_ru - u * s_r
    # jump of w at a finite cutoff contributes -w(Z-) rho(x+Z) (u(x+Z) - u(x))
    if math.isfinite(kernel.cutoff):
        wz = float(np.asarray(kernel._w(np.array([kernel.cutoff])))[0])
        if wz > 0.0 and K == int(math.floor(kernel.cutoff / dx + 1e-12)):
            idx = np.arange(n) + K
            inside = idx < n
            jump = np.zeros(n)
            jump[inside] = -wz * rho[idx[inside]] * (u[idx[inside]] - u[inside])
            out = out + jump
    return out
