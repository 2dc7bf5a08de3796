"""Generating-function coefficients for the fourth-order fractional operator.

Two families are produced.  ``G2(z) = (b0 + b1 z + b2 z**2) ** alpha`` gives a
second-order shifted difference, and ``G4(z) = [1 + eta * P(z)**2] * G2(z)``
(with ``P`` the quadratic inside ``G2``) lifts it to fourth order.  Every
routine here is a pure function of its arguments.

The quadratic factors as ``P(z) = b0 (1 - z)(1 - r z)`` with ``r = b2 / b0``,
which is what the direct binomial-sum oracle exploits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import DomainError, LossOfPrecisionWarning

__all__ = [
    "GenFnParams",
    "CoeffTable",
    "ExpansionCoeffs",
    "gen_fn_params",
    "g2_coeffs",
    "g2_coeffs_direct",
    "g2_coeffs_direct_table",
    "g2_coeffs_extended",
    "g4_coeffs",
    "g4_coeffs_recursive",
    "expansion_coeffs",
    "symbol_z1",
    "symbol_functions",
    "symbol_bounds",
    "symbol_expansion_residual",
    "kappa2_decay_constant",
    "log_gamma_ratio",
    "log_binom",
]


@dataclass(frozen=True)
class GenFnParams:
    alpha: float
    b0: float
    b1: float
    b2: float
    eta: float

    @property
    def ratio(self) -> float:
        """Second root parameter ``r = b2 / b0`` of ``P(z) = b0 (1-z)(1-rz)``."""
        return self.b2 / self.b0


@dataclass(frozen=True)
class CoeffTable:
    alpha: float
    family: str
    values: np.ndarray

    @property
    def length(self) -> int:
        return len(self.values)

    def partial_sum(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class ExpansionCoeffs:
    varrho1: float
    varrho2: float
    varrho3: float
    varrho4: float


def gen_fn_params(alpha: float) -> GenFnParams:
    """Closed-form ``b0, b1, b2, eta`` for order ``alpha >= 1``.

    >>> p = gen_fn_params(2.0)
    >>> (p.b0, p.b1, p.b2, p.eta)
    (1.0, -1.0, 0.0, 0.0)
    """
    alpha = float(alpha)
    if not alpha >= 1.0:
        raise DomainError(f"alpha must be >= 1, got {alpha!r}")
    b0 = (3.0 * alpha - 2.0) / (2.0 * alpha)
    b1 = -2.0 * (alpha - 1.0) / alpha
    b2 = (alpha - 2.0) / (2.0 * alpha)
    eta = (3.0 * alpha - 2.0) * (alpha - 2.0) * (alpha - 1.0) / (24.0 * alpha)
    return GenFnParams(alpha, b0, b1, b2, eta)


def _check_length(L: int) -> int:
    L = int(L)
    if L < 2:
        raise DomainError(f"table length L must be >= 2, got {L}")
    return L


def g2_coeffs(alpha: float, L: int, power: float | None = None) -> CoeffTable:
    """Taylor coefficients ``kappa_0..kappa_L`` of ``P(z) ** power``.

    ``P`` is always built from ``alpha``; ``power`` defaults to ``alpha``.
    Passing ``power=alpha + 2`` yields the auxiliary table needed by the
    fourth-order family.  Uses the three-term recurrence

        kappa_{n+1} = [b1 (p - n) kappa_n + b2 (2p - n + 1) kappa_{n-1}] / (b0 (n + 1))
    """
    prm = gen_fn_params(alpha)
    L = _check_length(L)
    p = prm.alpha if power is None else float(power)
    b0, b1, b2 = prm.b0, prm.b1, prm.b2
    k = np.empty(L + 1)
    k[0] = b0**p
    k[1] = p * b1 * b0 ** (p - 1.0)
    prev, cur = k[0], k[1]
    for n in range(1, L):
        nxt = (b1 * (p - n) * cur + b2 * (2.0 * p - n + 1.0) * prev) / (b0 * (n + 1.0))
        k[n + 1] = nxt
        prev, cur = cur, nxt
    return CoeffTable(prm.alpha, "G2" if power is None else f"G2^{p:g}", k)


# Stirling series B_{2j} / (2j (2j - 1)), j = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_STIRLING_MIN = 12.0


def _stirling_tail(z):
    zi = 1.0 / z
    zi2 = zi * zi
    out = np.zeros_like(z)
    term = zi.copy()
    for c in _STIRLING:
        out += c * term
        term *= zi2
    return out


def log_gamma_ratio(z, d: float):
    """``log|Gamma(z + d) / Gamma(z)|`` without catastrophic cancellation.

    For large arguments the two Stirling expansions are differenced term by
    term (leading part through ``log1p``), which keeps ~1e-15 relative
    accuracy in the ratio where plain ``gammaln(z+d) - gammaln(z)`` loses
    digits proportional to ``log Gamma(z)``.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = np.minimum(z, z + d) >= _STIRLING_MIN
    small = ~big
    if np.any(small):
        zs = z[small]
        out[small] = gammaln(zs + d) - gammaln(zs)
    if np.any(big):
        zb = z[big]
        z1 = zb + d
        out[big] = (
            (z1 - 0.5) * np.log1p(d / zb)
            + d * np.log(zb)
            - d
            + _stirling_tail(z1)
            - _stirling_tail(zb)
        )
    return out


def log_binom(alpha: float, k):
    """Generalized binomial ``C(alpha, k)`` as ``(log|C|, sign)`` arrays.

    Non-integer ``alpha`` uses ``C(alpha, k) = Gamma(k - alpha) / (Gamma(-alpha) k!)``
    scaled by ``(-1)**k``.  Integer ``alpha`` gives exact zeros past ``alpha``
    (``log = -inf``, ``sign = 0``).
    """
    k = np.atleast_1d(np.asarray(k))
    kf = k.astype(float)
    if float(alpha).is_integer():
        n = int(alpha)
        vals = np.array([math.comb(n, int(j)) if 0 <= j <= n else 0 for j in k], dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(vals), np.sign(vals)
    logc = log_gamma_ratio(kf + 1.0, -(alpha + 1.0)) - gammaln(-alpha)
    sign = gammasgn(kf - alpha) * gammasgn(-alpha) * np.where(k % 2 == 0, 1.0, -1.0)
    return logc, sign


def _direct_terms(alpha: float, n: int, power: float | None):
    prm = gen_fn_params(alpha)
    p = prm.alpha if power is None else float(power)
    r = prm.ratio
    k = np.arange(n + 1)
    lc_k, s_k = log_binom(p, k)
    lc_nk, s_nk = log_binom(p, n - k)
    if r == 0.0:
        lr = np.where(k == 0, 0.0, -np.inf)
        sr = np.where(k == 0, 1.0, 0.0)
    else:
        lr = k * math.log(abs(r))
        sr = np.where((k % 2 == 1) & (r < 0), -1.0, 1.0)
    with np.errstate(invalid="ignore"):
        logs = lr + lc_k + lc_nk
        terms = sr * s_k * s_nk * np.exp(logs)
    terms[~np.isfinite(logs)] = 0.0
    return prm, p, terms


def g2_coeffs_direct(alpha: float, n: int, power: float | None = None) -> float:
    """Single coefficient from the closed binomial sum

        kappa_n = (-1)**n b0**p * sum_k r**k C(p, k) C(p, n - k).

    Terms are formed in log space and summed with ``math.fsum``.  Emits
    :class:`LossOfPrecisionWarning` if cancellation could cost more than
    1e-8 relative accuracy.
    """
    n = int(n)
    if n < 0:
        raise DomainError(f"index n must be >= 0, got {n}")
    prm, p, terms = _direct_terms(alpha, n, power)
    total = math.fsum(terms)
    mag = math.fsum(np.abs(terms))
    if mag > 0 and (total == 0.0 or 4.0 * np.finfo(float).eps * mag / abs(total) > 1e-8):
        warnings.warn(
            f"direct sum for kappa_{n} (alpha={alpha}) cancels by a factor "
            f"{mag / abs(total) if total else float('inf'):.3g}",
            LossOfPrecisionWarning,
            stacklevel=2,
        )
    return (-1.0) ** n * prm.b0**p * total


def g2_coeffs_direct_table(alpha: float, L: int, power: float | None = None) -> np.ndarray:
    """All of ``kappa_0..kappa_L`` from the binomial sum (Cauchy product form)."""
    prm = gen_fn_params(alpha)
    L = int(L)
    p = prm.alpha if power is None else float(power)
    r = prm.ratio
    k = np.arange(L + 1)
    lc, sc = log_binom(p, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(sc == 0, 0.0, sc * np.exp(lc))
    rk = np.where(k == 0, 1.0, r ** k.astype(float))
    conv = np.convolve(rk * c, c)[: L + 1]
    return np.where(k % 2 == 0, 1.0, -1.0) * prm.b0**p * conv


def g2_coeffs_extended(alpha: float, L: int, power: float | None = None, dps: int = 40) -> np.ndarray:
    """Recurrence run in ``mpmath`` at ``dps`` digits, rounded to float64.

    Validation aid only; slow for large ``L``.
    """
    import mpmath as mp

    with mp.workdps(dps):
        a = mp.mpf(alpha)
        p = a if power is None else mp.mpf(power)
        b0 = (3 * a - 2) / (2 * a)
        b1 = -2 * (a - 1) / a
        b2 = (a - 2) / (2 * a)
        k = [b0**p, p * b1 * b0 ** (p - 1)]
        for n in range(1, int(L)):
            k.append((b1 * (p - n) * k[n] + b2 * (2 * p - n + 1) * k[n - 1]) / (b0 * (n + 1)))
        return np.array([float(v) for v in k[: int(L) + 1]])


def _check_operator_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (1, 2], got {alpha!r}")
    return alpha


def g4_coeffs(alpha: float, L: int) -> CoeffTable:
    """Fourth-order coefficients ``kappa4_m = kappa2_m(alpha) + eta * kappa2_m(alpha + 2)``.

    Both tables share the quadratic ``P`` built from ``alpha``.
    """
    alpha = _check_operator_alpha(alpha)
    prm = gen_fn_params(alpha)
    base = g2_coeffs(alpha, L).values
    aux = g2_coeffs(alpha, L, power=alpha + 2.0).values
    return CoeffTable(alpha, "G4", base + prm.eta * aux)


def g4_coeffs_recursive(alpha: float, L: int) -> CoeffTable:
    """Same coefficients via the mixed recursion that feeds on the ``alpha + 2`` table."""
    alpha = _check_operator_alpha(alpha)
    L = _check_length(L)
    prm = gen_fn_params(alpha)
    b0, b1, b2, eta = prm.b0, prm.b1, prm.b2, prm.eta
    aux = g2_coeffs(alpha, L, power=alpha + 2.0).values
    k = np.empty(L + 1)
    k[0] = b0**alpha * (1.0 + eta * b0**2)
    k[1] = b1 / b0 * (alpha * k[0] + 2.0 * eta * aux[0])
    for m in range(2, L + 1):
        k[m] = (
            b1 * (alpha - m + 1.0) * k[m - 1]
            + b2 * (2.0 * alpha - m + 2.0) * k[m - 2]
            + 2.0 * eta * b1 * aux[m - 1]
            + 4.0 * eta * b2 * aux[m - 2]
        ) / (m * b0)
    return CoeffTable(alpha, "G4", k)


def expansion_coeffs(alpha: float) -> ExpansionCoeffs:
    """Leading coefficients of ``exp(z) z**-alpha G4(exp(-z)) = 1 + sum varrho_m z**m``.

    Defined for ``alpha >= 1``; operator assembly uses ``1 < alpha <= 2``.
    """
    a = gen_fn_params(alpha).alpha
    varrho2 = (3 * a**3 - 19 * a**2 + 36 * a - 16) / (24 * a)
    varrho4 = -(
        30 * a**6 - 180 * a**5 + 459 * a**4 - 835 * a**3 + 1210 * a**2 - 990 * a + 300
    ) / (720 * a**3)
    return ExpansionCoeffs(0.0, varrho2, 0.0, varrho4)


def symbol_expansion_residual(alpha: float, z):
    """``exp(z) z**-alpha G4(exp(-z)) - 1 - varrho2 z**2 - varrho4 z**4`` for small ``z > 0``.

    ``P(exp(-z)) / z`` is formed from ``expm1`` so the small-``z`` limit is
    not swamped by cancellation.
    """
    prm = gen_fn_params(_check_operator_alpha(alpha))
    ec = expansion_coeffs(alpha)
    z = np.asarray(z, dtype=float)
    w = np.exp(-z)
    p_over_z = prm.b0 * (-np.expm1(-z) / z) * (1.0 - prm.ratio * w)
    pz = p_over_z * z
    val = np.exp(z) * p_over_z**prm.alpha * (1.0 + prm.eta * pz**2)
    return val - 1.0 - ec.varrho2 * z**2 - ec.varrho4 * z**4


def symbol_z1(alpha: float, s, params: GenFnParams | None = None):
    """``Z1(alpha, s) = cos[((s - pi)/2 + theta) alpha - s]``, ``theta = arctan(d2/d1)``.

    ``params`` fixes ``b0, b2`` (the ``alpha + 2`` evaluation reuses those of ``alpha``).
    """
    prm = gen_fn_params(alpha) if params is None else params
    s = np.asarray(s, dtype=float)
    d1 = prm.b0 - prm.b2 * np.cos(s)
    d2 = -prm.b2 * np.sin(s)
    theta = np.arctan(d2 / d1)
    return np.cos(((s - np.pi) / 2.0 + theta) * alpha - s)


def symbol_functions(alpha: float, s):
    """Return ``(Z1, Z)`` on angles ``s`` in ``[0, pi]``.

    ``Z = Z1(alpha) + 4 eta (d1**2 + d2**2) sin(s/2)**2 Z1(alpha + 2)``, which is
    non-positive on the whole admissible range.
    """
    alpha = _check_operator_alpha(alpha)
    prm = gen_fn_params(alpha)
    s = np.asarray(s, dtype=float)
    if np.any((s < 0.0) | (s > np.pi)):
        raise DomainError("s must lie in [0, pi]")
    d1 = prm.b0 - prm.b2 * np.cos(s)
    d2 = -prm.b2 * np.sin(s)
    z1 = symbol_z1(alpha, s, prm)
    z1p2 = symbol_z1(alpha + 2.0, s, prm)
    z = z1 + 4.0 * prm.eta * (d1**2 + d2**2) * np.sin(s / 2.0) ** 2 * z1p2
    return z1, z


def symbol_bounds(alpha: float) -> tuple[float, float]:
    """Two-sided envelope ``(lower, upper)`` that ``Z(alpha, .)`` stays within."""
    prm = gen_fn_params(_check_operator_alpha(alpha))
    a = prm.alpha
    lower = -1.0 + 16.0 * prm.eta * (a - 1.0) ** 2 / a**2
    upper = math.cos(math.pi * a / 2.0) - 4.0 * prm.eta
    return lower, upper


def kappa2_decay_constant(alpha: float) -> float:
    """Limit of ``kappa2_n * n**(alpha + 1)``, equal to ``1 / Gamma(-alpha)``.

    Written out this is ``-sin(pi alpha) Gamma(alpha + 1) / pi``; it is positive
    for ``1 < alpha < 2`` since the tail weights are positive there.
    """
    alpha = float(alpha)
    return -math.sin(math.pi * alpha) * math.gamma(alpha + 1.0) / math.pi
