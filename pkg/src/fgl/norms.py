"""Discrete norms on grid functions supported on the interior nodes.

The fractional semi-norm is ``|u|^2 = h**(1 - 2 sigma) / (2 pi) * integral of
|s|**(2 sigma) |sum_j u_j exp(-i j s)|**2 over [-pi, pi]``.  Expanding the
modulus gives the autocorrelation ``r_m = sum_j u_{j+m} conj(u_j)`` against the
moments ``w_m = integral |s|**(2 sigma) cos(m s)``, so the integral is evaluated
exactly up to the accuracy of the moments rather than by a quadrature grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import beta as beta_fn

from .errors import ContractError, DomainError
from .operators import Grid1D

__all__ = [
    "GridFunction",
    "norm_l2h",
    "norm_lph",
    "inner_h",
    "frac_seminorm",
    "frac_norm",
    "symbol_moments",
    "interpolation_probe",
    "gn_constant",
    "gn_probe",
]


@dataclass(frozen=True)
class GridFunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.shape[0] != self.grid.n_interior:
            raise ContractError(
                f"expected {self.grid.n_interior} interior values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ContractError("grid function has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return self.grid.h

    def scaled(self, c) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)


def norm_l2h(u: GridFunction) -> float:
    return math.sqrt(u.h * float(np.sum(np.abs(u.values) ** 2)))


def inner_h(u: GridFunction, v: GridFunction) -> complex:
    """``(u, v)_h = h * sum u_j conj(v_j)``."""
    return u.h * complex(np.sum(u.values * np.conj(v.values)))


def norm_lph(u: GridFunction, p: float) -> float:
    """``(h * sum |u_j|**p) ** (1/p)``, or ``max |u_j|`` for ``p = inf``."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p!r}")
    a = np.abs(u.values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    m = float(a.max()) if a.size else 0.0
    if m == 0.0:
        return 0.0
    return m * (u.h * float(np.sum((a / m) ** p))) ** (1.0 / p)


def _moment(sigma: float, m: int) -> float:
    c = 2.0 * sigma
    if m == 0:
        return 2.0 * math.pi ** (c + 1.0) / (c + 1.0)
    if c == 0.0:
        return 0.0
    val, _ = quad(lambda s: s**c, 0.0, math.pi, weight="cos", wvar=m, limit=200)
    return 2.0 * val


@lru_cache(maxsize=64)
def _moments_cached(sigma: float, n: int) -> np.ndarray:
    w = np.array([_moment(sigma, m) for m in range(n)])
    w.setflags(write=False)
    return w


def symbol_moments(sigma: float, n: int) -> np.ndarray:
    """``w_m = integral_{-pi}^{pi} |s|**(2 sigma) cos(m s) ds`` for ``m = 0..n-1``.

    Computed with an oscillatory (Fourier-weight) adaptive quadrature and cached.
    """
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma!r}")
    return _moments_cached(float(sigma), int(n))


def _autocorr(v: np.ndarray) -> np.ndarray:
    n = len(v)
    m = 1
    while m < 2 * n:
        m *= 2
    f = np.fft.fft(v, m)
    return np.fft.ifft(np.abs(f) ** 2)[:n]


def frac_seminorm(u: GridFunction, sigma: float) -> float:
    """Fractional Sobolev semi-norm ``|u|_{H_h^sigma}`` of the zero-extended field."""
    n = len(u.values)
    w = symbol_moments(sigma, n)
    if sigma == 0.0:
        return norm_l2h(u)
    r = _autocorr(u.values.astype(complex))
    total = w[0] * r[0].real + 2.0 * float(np.dot(w[1:], r[1:].real))
    val = u.h ** (1.0 - 2.0 * sigma) / (2.0 * math.pi) * total
    return math.sqrt(max(val, 0.0))


def frac_norm(u: GridFunction, sigma: float) -> float:
    """``||u||_{H_h^sigma} = sqrt(||u||_h**2 + |u|_{H_h^sigma}**2)``."""
    return math.hypot(norm_l2h(u), frac_seminorm(u, sigma))


def _check_sigmas(sigma0: float, sigma: float) -> None:
    if not 0.0 <= sigma0 <= sigma <= 1.0:
        raise DomainError(f"need 0 <= sigma0 <= sigma <= 1, got {sigma0}, {sigma}")
    if sigma == 0.0:
        raise DomainError("sigma must be positive")


def interpolation_probe(u: GridFunction, sigma0: float, sigma: float) -> tuple[float, float]:
    """``(lhs, rhs)`` of ``||u||_{H^s0} <= 2**((s - s0)/(2 s)) ||u||_{H^s}**(s0/s) ||u||_h**(1 - s0/s)``."""
    _check_sigmas(sigma0, sigma)
    theta = sigma0 / sigma
    lhs = frac_norm(u, sigma0)
    rhs = 2.0 ** ((sigma - sigma0) / (2.0 * sigma)) * frac_norm(u, sigma) ** theta * norm_l2h(u) ** (1.0 - theta)
    return lhs, rhs


def gn_constant(sigma0: float, sigma: float, p: float) -> float:
    """Leading constant of the discrete Gagliardo-Nirenberg bound."""
    if not (2.0 < p < math.inf):
        raise DomainError(f"p must satisfy 2 < p < inf, got {p!r}")
    _check_sigmas(sigma0, sigma)
    if not sigma0 > (p - 2.0) / (2.0 * p):
        raise DomainError(f"need sigma0 > (p-2)/(2p) = {(p - 2) / (2 * p)}, got {sigma0}")
    bb = beta_fn(1.0 / (2.0 * sigma0), p / (p - 2.0) - 1.0 / (2.0 * sigma0))
    return (
        2.0 ** ((sigma - sigma0) / (2.0 * sigma))
        * sigma0 ** ((2.0 - p) / (2.0 * p))
        * p ** (-p / 2.0)
        * (p / (p - 1.0)) ** (p / (2.0 * (p - 1.0)))
        * bb ** ((p - 2.0) / (2.0 * p))
    )


def gn_probe(u: GridFunction, sigma0: float, sigma: float, p: float) -> tuple[float, float]:
    """``(lhs, rhs)`` with ``lhs = ||u||_{l_h^p}`` and ``rhs`` the interpolated bound."""
    c = gn_constant(sigma0, sigma, p)
    theta = sigma0 / sigma
    lhs = norm_lph(u, p)
    rhs = c * frac_norm(u, sigma) ** theta * norm_l2h(u) ** (1.0 - theta)
    return lhs, rhs
