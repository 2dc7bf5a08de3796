"""Time stepping for the coupled fractional Ginzburg-Landau system.

Model (``s = 1, 2`` with partner field ``w``)::

    u_t + (beta + i eta) (-Delta)^{alpha/2} u + (mu + i zeta) |u|^2 u - gamma u - i |u|^2 w = 0

Each step solves the implicit midpoint relation for ``U^{k+1/2}`` by lagged
fixed-point iteration on the cubic terms, then sets ``U^{k+1} = 2 U^{k+1/2} - U^k``.
With ``Q = A^{-1} B`` the half-step satisfies

    M U^{k+1/2} = A U^k + (tau/2) A N(U^{k+1/2}, V^{k+1/2}),
    M = (1 - tau gamma / 2) A - (tau/2)(beta + i eta) B.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConfigError, InputError, NonConvergenceError
from .norms import GridFunction, norm_l2h
from .operators import DiscreteOperator, Grid1D, apply_A, apply_B, assemble, solve_A

__all__ = [
    "ModelParams",
    "FieldPair",
    "StepMatrices",
    "IterationReport",
    "EnergyTrace",
    "RunResult",
    "init_fields",
    "build_step_matrices",
    "predictor",
    "fixed_point_halfstep",
    "step",
    "run",
    "energy",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 2048


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients, domain and horizon.

    Physical runs need ``beta, eta, zeta > 0`` and ``mu >= 0``; ``test_mode``
    relaxes these to non-negativity so degenerate linear checks are possible.
    """

    alpha: float
    beta1: float
    beta2: float
    eta1: float
    eta2: float
    mu1: float
    mu2: float
    zeta1: float
    zeta2: float
    gamma1: float
    gamma2: float
    a: float = -1.0
    b: float = 1.0
    T: float = 1.0
    test_mode: bool = False

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError(problems)

    def violations(self) -> list[str]:
        p = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "test_mode" and not (isinstance(v, (int, float)) and math.isfinite(v)):
                p.append(f"{f.name} must be a finite number, got {v!r}")
        if p:
            return p
        if not 1.0 < self.alpha <= 2.0:
            p.append(f"alpha must lie in (1, 2], got {self.alpha}")
        if not self.b > self.a:
            p.append(f"domain needs a < b, got a={self.a}, b={self.b}")
        if not self.T > 0:
            p.append(f"T must be positive, got {self.T}")
        strict = ("beta1", "beta2", "eta1", "eta2", "zeta1", "zeta2")
        for name in strict:
            v = getattr(self, name)
            if self.test_mode and v < 0:
                p.append(f"{name} must be >= 0 in test mode, got {v}")
            elif not self.test_mode and not v > 0:
                p.append(f"{name} must be > 0, got {v}")
        for name in ("mu1", "mu2"):
            v = getattr(self, name)
            if v < 0:
                p.append(f"{name} must be >= 0, got {v}")
        return p

    @property
    def gamma_max(self) -> float:
        return max(abs(self.gamma1), abs(self.gamma2))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class FieldPair:
    U: np.ndarray
    V: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        V = np.asarray(self.V, dtype=complex)
        if U.shape != V.shape or U.ndim != 1:
            raise InputError(f"U and V must be equal-length vectors, got {U.shape} and {V.shape}")
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            raise InputError("fields contain non-finite values")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)


@dataclass(frozen=True)
class IterationReport:
    iterations: int
    final_update: float
    converged: bool


@dataclass
class EnergyTrace:
    t: list = field(default_factory=list)
    W: list = field(default_factory=list)

    def record(self, t: float, W: float) -> None:
        self.t.append(float(t))
        self.W.append(float(W))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.t), np.asarray(self.W)


class _LinearSolver:
    """Solve ``M x = rhs`` for ``M = c A - d B`` (``c`` real, ``d`` complex)."""

    def __init__(self, op: DiscreteOperator, c: float, d: complex, method: str):
        self.op, self.c, self.d = op, c, d
        n = op.n
        if method == "auto":
            method = "dense" if n <= DENSE_LIMIT else "krylov"
        self.method = method
        if method == "dense":
            M = c * op.A_dense() - d * op.B_dense()
            self._lu = lu_factor(M.astype(complex), check_finite=False)
        elif method == "krylov":
            self._M = LinearOperator((n, n), matvec=self._matvec, dtype=complex)
            self._P = LinearOperator((n, n), matvec=self._precond, dtype=complex)
            self._strang = self._strang_eigs()
        else:
            raise ConfigError(f"unknown linear solver {method!r}")

    def _matvec(self, x):
        return self.c * apply_A(self.op, x) - self.d * apply_B(self.op, x, "fft")

    def _strang_eigs(self):
        # Strang circulant approximations of A and B share the Fourier basis.
        op, n = self.op, self.op.n
        colB = np.zeros(n)
        half = n // 2
        colB[: half + 1] = op.b_col[: half + 1]
        colB[half + 1 :] = op.b_col[1 : n - half][::-1]
        colA = np.zeros(n)
        colA[0] = op.a_diag
        colA[1] = colA[-1] = op.a_off
        return self.c * np.fft.fft(colA) - self.d * np.fft.fft(colB)

    def _precond(self, x):
        return np.fft.ifft(np.fft.fft(x) / self._strang)

    def solve(self, rhs):
        if self.method == "dense":
            return lu_solve(self._lu, rhs, check_finite=False)
        x, info = gmres(self._M, rhs, M=self._P, rtol=1e-13, atol=0.0, restart=50, maxiter=200)
        if info != 0:
            raise NonConvergenceError(f"GMRES did not reach 1e-13 (info={info})")
        return x


@dataclass(frozen=True, eq=False)
class StepMatrices:
    """Per-``tau`` system matrices ``M1, M2`` with cached factorizations."""

    op: DiscreteOperator
    tau: float
    M1: _LinearSolver
    M2: _LinearSolver

    @property
    def method(self) -> str:
        return self.M1.method


def build_step_matrices(
    params: ModelParams, op: DiscreteOperator, tau: float, method: str = "auto"
) -> StepMatrices:
    """Factor ``M_s = (1 - tau gamma_s / 2) A - (tau/2)(beta_s + i eta_s) B``.

    ``method`` is ``"dense"`` (LU), ``"krylov"`` (GMRES with FFT matvec and a
    Strang circulant preconditioner) or ``"auto"`` (dense up to 2048 unknowns).
    """
    if not tau > 0:
        raise InputError(f"tau must be positive, got {tau}")
    m1 = _LinearSolver(
        op, 1.0 - tau * params.gamma1 / 2.0, tau / 2.0 * (params.beta1 + 1j * params.eta1), method
    )
    m2 = _LinearSolver(
        op, 1.0 - tau * params.gamma2 / 2.0, tau / 2.0 * (params.beta2 + 1j * params.eta2), method
    )
    return StepMatrices(op, float(tau), m1, m2)


def init_fields(params: ModelParams, grid: Grid1D, u0, v0) -> FieldPair:
    """Sample ``u0, v0`` at the interior nodes."""
    x = grid.interior
    U = np.broadcast_to(np.asarray(u0(x), dtype=complex), x.shape).copy()
    V = np.broadcast_to(np.asarray(v0(x), dtype=complex), x.shape).copy()
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
        raise InputError("initial condition produced non-finite samples")
    return FieldPair(U, V, 0.0)


def _nonlin(params: ModelParams, U, V):
    aU = np.abs(U) ** 2
    aV = np.abs(V) ** 2
    fU = -(params.mu1 + 1j * params.zeta1) * aU * U + 1j * aU * V
    fV = -(params.mu2 + 1j * params.zeta2) * aV * V + 1j * aV * U
    return fU, fV


def predictor(history, params: ModelParams, op: DiscreteOperator, tau: float) -> FieldPair:
    """Initial guess for ``U^{k+1/2}``.

    ``history`` is ``(current,)`` at the first step, which uses an explicit
    half step, or ``(previous, current)`` later, which extrapolates
    ``1.5 current - 0.5 previous``.
    """
    cur = history[-1]
    if len(history) >= 2:
        prev = history[-2]
        return FieldPair(1.5 * cur.U - 0.5 * prev.U, 1.5 * cur.V - 0.5 * prev.V, cur.t + tau / 2)
    U, V = cur.U, cur.V
    QU = solve_A(op, apply_B(op, U))
    QV = solve_A(op, apply_B(op, V))
    fU, fV = _nonlin(params, U, V)
    pU = U + tau / 2 * ((params.beta1 + 1j * params.eta1) * QU + params.gamma1 * U + fU)
    pV = V + tau / 2 * ((params.beta2 + 1j * params.eta2) * QV + params.gamma2 * V + fV)
    return FieldPair(pU, pV, cur.t + tau / 2)


def fixed_point_halfstep(
    state: FieldPair,
    pred: FieldPair,
    mats: StepMatrices,
    params: ModelParams,
    tol: float = 1e-14,
    max_iter: int = 200,
) -> tuple[FieldPair, IterationReport]:
    """Iterate the half-step relation until the sup-norm update is at most ``tol``.

    Raises :class:`NonConvergenceError` (carrying the report) after ``max_iter``.
    """
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    op, tau = mats.op, mats.tau
    AU = apply_A(op, state.U)
    AV = apply_A(op, state.V)
    U, V = pred.U, pred.V
    upd = math.inf
    for it in range(1, max_iter + 1):
        fU, fV = _nonlin(params, U, V)
        nU = mats.M1.solve(AU + tau / 2 * apply_A(op, fU))
        nV = mats.M2.solve(AV + tau / 2 * apply_A(op, fV))
        upd = max(float(np.max(np.abs(nU - U), initial=0.0)), float(np.max(np.abs(nV - V), initial=0.0)))
        U, V = nU, nV
        if upd <= tol:
            rep = IterationReport(it, upd, True)
            return FieldPair(U, V, state.t + tau / 2), rep
        if not math.isfinite(upd):
            break
    rep = IterationReport(it, upd, False)
    raise NonConvergenceError(
        f"fixed-point iteration stalled at t={state.t:g}: update {upd:.3e} > tol {tol:.1e} "
        f"after {rep.iterations} iterations",
        rep,
    )


def step(
    history,
    mats: StepMatrices,
    params: ModelParams,
    tol: float = 1e-14,
    max_iter: int = 200,
) -> tuple[FieldPair, IterationReport]:
    """Advance one step: predict, iterate the half step, double back."""
    state = history[-1]
    pred = predictor(history, params, mats.op, mats.tau)
    half, rep = fixed_point_halfstep(state, pred, mats, params, tol, max_iter)
    nxt = FieldPair(2.0 * half.U - state.U, 2.0 * half.V - state.V, state.t + mats.tau)
    return nxt, rep


def energy(state: FieldPair, grid: Grid1D) -> float:
    """``W = ||U||_h**2 + ||V||_h**2``."""
    return norm_l2h(GridFunction(grid, state.U)) ** 2 + norm_l2h(GridFunction(grid, state.V)) ** 2


@dataclass
class RunResult:
    final: FieldPair
    trace: EnergyTrace
    reports: list
    grid: Grid1D
    tau: float
    bound_ok: bool
    bound_slack: float
    step_condition_ok: bool
    timings: dict
    error: Exception | None = None

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iterations for r in self.reports], dtype=int)


def run(
    params: ModelParams,
    grid: Grid1D,
    nt: int,
    u0=None,
    v0=None,
    *,
    initial: FieldPair | None = None,
    tol: float = 1e-14,
    max_iter: int = 200,
    method: str = "auto",
    callbacks=(),
    op: DiscreteOperator | None = None,
    raise_on_failure: bool = True,
) -> RunResult:
    """Integrate from ``t = 0`` to ``T`` in ``nt`` steps.

    ``callbacks`` receive ``(k, state)`` after every accepted step (and once
    with ``k = 0`` for the initial state).  Warns when ``tau * max|gamma| > 1/2``,
    where the energy bound ``W^k <= exp(4 gamma T) W^0`` is not guaranteed; the
    bound is monitored either way.  On a step failure the partial result is
    attached to the raised error as ``err.result`` unless ``raise_on_failure``
    is false, in which case it is returned with ``error`` set.
    """
    nt = int(nt)
    if nt < 1:
        raise InputError(f"nt must be >= 1, got {nt}")
    tau = params.T / nt
    t0 = time.perf_counter()
    if op is None:
        op = assemble(params.alpha, grid)
    step_ok = tau * params.gamma_max <= 0.5
    if not step_ok:
        warnings.warn(
            f"tau * max|gamma| = {tau * params.gamma_max:g} exceeds 1/2; "
            "the energy bound is not guaranteed",
            RuntimeWarning,
            stacklevel=2,
        )
    mats = build_step_matrices(params, op, tau, method)
    t1 = time.perf_counter()
    if initial is None:
        if u0 is None or v0 is None:
            raise InputError("provide u0 and v0 or an initial FieldPair")
        initial = init_fields(params, grid, u0, v0)
    trace = EnergyTrace()
    W0 = energy(initial, grid)
    trace.record(0.0, W0)
    for cb in callbacks:
        cb(0, initial)
    growth = 4.0 * params.gamma_max
    history = [initial]
    reports = []
    slack = -math.inf
    err = None
    for k in range(1, nt + 1):
        try:
            nxt, rep = step(history, mats, params, tol, max_iter)
        except NonConvergenceError as e:
            err = e
            if e.report is not None:
                reports.append(e.report)
            break
        nxt = FieldPair(nxt.U, nxt.V, k * tau)
        reports.append(rep)
        W = energy(nxt, grid)
        trace.record(nxt.t, W)
        if W0 > 0:
            excess = math.log(W / W0) - growth * params.T if W > 0 else -math.inf
        else:
            excess = math.inf if W > 0 else -math.inf
        slack = max(slack, excess)
        for cb in callbacks:
            cb(k, nxt)
        history = [history[-1], nxt]
    t2 = time.perf_counter()
    res = RunResult(
        final=history[-1],
        trace=trace,
        reports=reports,
        grid=grid,
        tau=tau,
        bound_ok=slack <= 1e-12,
        bound_slack=slack,
        step_condition_ok=step_ok,
        timings={"assemble": t1 - t0, "integrate": t2 - t1},
        error=err,
    )
    if err is not None and raise_on_failure:
        err.result = res
        raise err
    return res
