"""Discrete compact operator ``A`` and fractional operator ``B`` on a uniform grid.

Fields live on the interior nodes ``x_1..x_{nx-1}``; values outside are zero.
With ``B`` negative semi-definite, ``A y = -B u`` yields the fourth-order
approximation ``y`` of ``(-Delta)^{alpha/2} u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.special import gammaln

from .coeffs import CoeffTable, expansion_coeffs, g4_coeffs, gen_fn_params
from .errors import ContractError, DomainError, InputError

__all__ = [
    "Grid1D",
    "DiscreteOperator",
    "PolyOracle",
    "assemble",
    "apply_A",
    "apply_B",
    "solve_A",
    "frac_laplacian",
    "poly_exact_frac_laplacian",
    "a_eigenvalues",
    "form_constants",
    "quadratic_form_bounds",
]


@dataclass(frozen=True)
class Grid1D:
    a: float
    b: float
    nx: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.b > self.a:
            raise InputError(f"need finite a < b, got a={self.a}, b={self.b}")
        if int(self.nx) != self.nx or self.nx < 3:
            raise InputError(f"nx must be an integer >= 3, got {self.nx}")
        object.__setattr__(self, "nx", int(self.nx))

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def n_interior(self) -> int:
        return self.nx - 1

    @property
    def nodes(self) -> np.ndarray:
        """All nodes ``x_0..x_nx``."""
        return self.a + np.arange(self.nx + 1) * self.h

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def node_index(self, x: float, rtol: float = 1e-9) -> int:
        """Index ``j`` with ``x_j == x``; raises :class:`InputError` if ``x`` is off-grid."""
        j = (x - self.a) / self.h
        jr = int(round(j))
        if abs(j - jr) > rtol * max(1.0, abs(j)):
            raise InputError(f"x={x} is not a node of the grid with h={self.h}")
        return jr


def _fft_len(n: int) -> int:
    m = 1
    while m < 2 * n:
        m *= 2
    return m


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Assembled pair ``(A, B)``.

    ``A`` is stored by its constant diagonal and off-diagonal, ``B`` by its
    symmetric Toeplitz first column.  Dense forms are built on request only.
    """

    alpha: float
    grid: Grid1D
    kappa: CoeffTable
    varrho2: float
    b_col: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.n_interior

    @property
    def a_diag(self) -> float:
        return 1.0 - 2.0 * self.varrho2

    @property
    def a_off(self) -> float:
        return self.varrho2

    @cached_property
    def _chol(self):
        ab = np.empty((2, self.n))
        ab[0, 0] = 0.0
        ab[0, 1:] = self.a_off
        ab[1, :] = self.a_diag
        return cholesky_banded(ab, lower=False)

    @cached_property
    def _b_spectrum(self) -> np.ndarray:
        n = self.n
        m = _fft_len(n)
        emb = np.zeros(m)
        emb[:n] = self.b_col
        emb[m - n + 1 :] = self.b_col[1:][::-1]
        return np.fft.fft(emb)

    def A_dense(self) -> np.ndarray:
        n = self.n
        return (
            np.diag(np.full(n, self.a_diag))
            + np.diag(np.full(n - 1, self.a_off), 1)
            + np.diag(np.full(n - 1, self.a_off), -1)
        )

    def B_dense(self) -> np.ndarray:
        from scipy.linalg import toeplitz

        return toeplitz(self.b_col)


def assemble(alpha: float, grid: Grid1D) -> DiscreteOperator:
    """Build ``A = tridiag(r2, 1 - 2 r2, r2)`` and the first column of ``B``.

    ``B = -(H + H^T) / (2 h**alpha cos(pi alpha / 2))`` where ``H`` is the
    lower-Hessenberg Toeplitz matrix of the fourth-order weights, so the
    first column is ``-(2 k1, k0 + k2, k3, ..., k_{nx-1}) / (2 h**alpha cos)``.
    """
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha!r}")
    n = grid.n_interior
    kap = g4_coeffs(alpha, max(grid.nx, 2))
    k = kap.values
    col = np.empty(n)
    col[0] = 2.0 * k[1]
    if n > 1:
        col[1] = k[0] + k[2]
    if n > 2:
        col[2:] = k[3 : n + 1]
    col *= -1.0 / (2.0 * grid.h**alpha * math.cos(math.pi * alpha / 2.0))
    col.setflags(write=False)
    return DiscreteOperator(alpha, grid, kap, expansion_coeffs(alpha).varrho2, col)


def _check_vec(op: DiscreteOperator, u) -> np.ndarray:
    u = np.asarray(u)
    if u.ndim != 1 or u.shape[0] != op.n:
        raise ContractError(f"expected a vector of length {op.n}, got shape {u.shape}")
    return u


def apply_A(op: DiscreteOperator, u) -> np.ndarray:
    u = _check_vec(op, u)
    y = op.a_diag * u
    y[1:] += op.a_off * u[:-1]
    y[:-1] += op.a_off * u[1:]
    return y


def _apply_B_direct(op: DiscreteOperator, u: np.ndarray) -> np.ndarray:
    c = op.b_col
    n = op.n
    y = c[0] * u
    for d in range(1, n):
        y[d:] += c[d] * u[:-d]
        y[:-d] += c[d] * u[d:]
    return y


def _apply_B_fft(op: DiscreteOperator, u: np.ndarray) -> np.ndarray:
    n = op.n
    m = len(op._b_spectrum)
    pad = np.zeros(m, dtype=np.result_type(u, float))
    pad[:n] = u
    y = np.fft.ifft(op._b_spectrum * np.fft.fft(pad))[:n]
    return y if np.iscomplexobj(u) else y.real


def apply_B(op: DiscreteOperator, u, method: str = "auto") -> np.ndarray:
    """Toeplitz product ``B u``.

    ``method`` is ``"direct"`` (diagonal-by-diagonal summation, fixed order),
    ``"fft"`` (circulant embedding of length the next power of two at least
    ``2 (nx - 1)``) or ``"auto"`` (direct up to 256 unknowns, FFT above).
    """
    u = _check_vec(op, u)
    if method == "auto":
        method = "direct" if op.n <= 256 else "fft"
    if method == "direct":
        return _apply_B_direct(op, u)
    if method == "fft":
        return _apply_B_fft(op, u)
    raise ContractError(f"unknown method {method!r}")


def solve_A(op: DiscreteOperator, rhs) -> np.ndarray:
    """Solve ``A y = rhs`` with the cached banded Cholesky factor."""
    rhs = _check_vec(op, rhs)
    if np.iscomplexobj(rhs):
        return cho_solve_banded((op._chol, False), rhs.real) + 1j * cho_solve_banded(
            (op._chol, False), rhs.imag
        )
    return cho_solve_banded((op._chol, False), rhs)


def frac_laplacian(op: DiscreteOperator, u, method: str = "auto") -> np.ndarray:
    """Compact approximation ``y`` of ``(-Delta)^{alpha/2} u`` from ``A y = -B u``."""
    return solve_A(op, -apply_B(op, u, method))


def a_eigenvalues(alpha: float, nx: int) -> np.ndarray:
    """Closed-form eigenvalues ``1 - 4 r2 sin(j pi / (2 nx))**2``, ``j = 1..nx-1``."""
    r2 = expansion_coeffs(alpha).varrho2
    j = np.arange(1, nx)
    return 1.0 - 4.0 * r2 * np.sin(j * np.pi / (2.0 * nx)) ** 2


def form_constants(alpha: float) -> tuple[float, float]:
    """``(C1, C2)`` bracketing the symbol of ``A^{-1} B`` against ``|s|**alpha h**-alpha``.

    ``C2 * |s|**alpha <= lambda(s) h**alpha <= C1 * |s|**alpha`` for the
    half-sum of the symbol, i.e. one of the two conjugate terms.
    """
    prm = gen_fn_params(alpha)
    a = prm.alpha
    c = math.cos(math.pi * a / 2.0)
    r2 = expansion_coeffs(a).varrho2
    c1 = (prm.b0 + prm.b2) ** a * (4.0 * prm.eta - c) / (2.0 * c) * (2.0 / math.pi) ** a
    c2 = (prm.b0 - prm.b2) ** a * (a * a - 16.0 * prm.eta * (a - 1.0) ** 2) / (
        2.0 * a * a * c * (1.0 - 4.0 * r2)
    )
    return c1, c2


def quadratic_form_bounds(alpha: float) -> tuple[float, float]:
    """Bounds ``(lower, upper)`` on ``(A^{-1} B u, u)_h / |u|^2_{H^{alpha/2}}``.

    The full symbol is the term plus its conjugate, so the constants of
    :func:`form_constants` enter doubled: ``(2 C2, 2 C1)``.
    """
    c1, c2 = form_constants(alpha)
    return 2.0 * c2, 2.0 * c1


@dataclass(frozen=True)
class PolyOracle:
    """Polynomial ``u`` on ``[a, b]`` given in both endpoint expansions.

    ``left[p]`` multiplies ``(x - a)**p`` and ``right[p]`` multiplies ``(b - x)**p``.
    Both must vanish to fourth order at their endpoint so the zero extension
    is smooth enough for the exact derivative to be meaningful.
    """

    a: float
    b: float
    left: tuple
    right: tuple

    def __post_init__(self):
        for name, c in (("left", self.left), ("right", self.right)):
            if any(abs(v) > 0 for v in c[:4]):
                raise ContractError(
                    f"{name} expansion has nonzero terms below order 4; "
                    "the zero extension is not smooth enough"
                )
        xs = np.linspace(self.a, self.b, 7)
        ul = self._eval(self.left, xs - self.a)
        ur = self._eval(self.right, self.b - xs)
        scale = max(1.0, float(np.max(np.abs(ul))))
        if not np.allclose(ul, ur, rtol=1e-10, atol=1e-12 * scale):
            raise ContractError("left and right expansions describe different polynomials")

    @staticmethod
    def _eval(c, t):
        return np.polynomial.polynomial.polyval(t, np.asarray(c, dtype=float))

    def __call__(self, x):
        return self._eval(self.left, np.asarray(x, dtype=float) - self.a)

    @classmethod
    def from_coefficients(cls, coeffs, a: float = 0.0, b: float = 1.0) -> "PolyOracle":
        """Build from ascending coefficients in powers of ``x``."""
        P = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        left = P(np.polynomial.Polynomial([a, 1.0])).coef
        right = P(np.polynomial.Polynomial([b, -1.0])).coef
        scale = max(1.0, float(np.max(np.abs(left))), float(np.max(np.abs(right))))
        left = np.where(np.abs(left) < 1e-13 * scale, 0.0, left)
        right = np.where(np.abs(right) < 1e-13 * scale, 0.0, right)
        return cls(float(a), float(b), tuple(left), tuple(right))

    @classmethod
    def example1(cls) -> "PolyOracle":
        """``u(x) = x**4 (1 - x)**4`` on ``[0, 1]``."""
        c = (0.0, 0.0, 0.0, 0.0, 1.0, -4.0, 6.0, -4.0, 1.0)
        return cls(0.0, 1.0, c, c)


def _rl_sum(coeffs, t, alpha):
    out = np.zeros_like(t)
    for p, c in enumerate(coeffs):
        if c == 0.0:
            continue
        if float(p + 1 - alpha).is_integer() and p + 1 - alpha <= 0:
            continue  # 1/Gamma at a pole vanishes
        g = np.exp(gammaln(p + 1.0) - gammaln(p + 1.0 - alpha))
        out += c * g * t ** (p - alpha)
    return out


def poly_exact_frac_laplacian(oracle: PolyOracle, x, alpha: float):
    """Exact ``(-Delta)^{alpha/2} u(x)`` for the zero-extended polynomial.

    Sum of the left and right Riemann-Liouville derivatives, each a term-wise
    power rule, divided by ``2 cos(pi alpha / 2)``.
    """
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha!r}")
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= oracle.a) | (xa >= oracle.b)):
        raise DomainError("x must lie strictly inside (a, b)")
    dl = _rl_sum(oracle.left, xa - oracle.a, alpha)
    dr = _rl_sum(oracle.right, oracle.b - xa, alpha)
    out = (dl + dr) / (2.0 * math.cos(math.pi * alpha / 2.0))
    return float(out) if np.ndim(out) == 0 else out
