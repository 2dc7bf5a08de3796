import math
import warnings

import numpy as np
import pytest

from fgl.errors import ConfigError, InputError, NonConvergenceError
from fgl.operators import Grid1D, assemble
from fgl.solver import (
    FieldPair,
    ModelParams,
    build_step_matrices,
    energy,
    fixed_point_halfstep,
    predictor,
    run,
    step,
)

BASE = dict(beta1=0.01, beta2=0.01, eta1=0.01, eta2=0.01, mu1=1.0, mu2=1.0, zeta1=0.01, zeta2=0.01,
            gamma1=0.087, gamma2=0.087)


def params(alpha=1.5, **kw):
    d = dict(BASE)
    d.update(kw)
    return ModelParams(alpha=alpha, **d)


def gauss(c, w=0.15, k=0.0):
    return lambda x: np.exp(-(((x - c) / w) ** 2)) * np.exp(1j * k * x)


class TestModelParams:
    def test_collects_all_violations(self):
        with pytest.raises(ConfigError) as ei:
            params(alpha=2.5, beta1=0.0, mu2=-1.0, T=-1.0)
        probs = ei.value.problems
        assert len(probs) == 4
        assert any("alpha" in p for p in probs) and any("mu2" in p for p in probs)

    def test_test_mode_allows_zeros(self):
        p = params(beta1=0.0, eta1=0.0, zeta1=0.0, test_mode=True)
        assert p.beta1 == 0.0
        with pytest.raises(ConfigError):
            params(beta1=-1.0, test_mode=True)

    def test_non_finite(self):
        with pytest.raises(ConfigError):
            params(gamma1=math.nan)

    def test_gamma_max(self):
        assert params(gamma1=0.25, gamma2=-2.0).gamma_max == 2.0

    def test_field_pair_validation(self):
        with pytest.raises(InputError):
            FieldPair(np.zeros(3), np.zeros(4))
        with pytest.raises(InputError):
            FieldPair(np.array([np.inf]), np.zeros(1))


class TestSteps:
    def setup_method(self):
        self.p = params()
        self.g = Grid1D(-1.0, 1.0, 32)
        self.op = assemble(1.5, self.g)
        x = self.g.interior
        self.s0 = FieldPair(0.3 * gauss(-0.2)(x), 0.3 * gauss(0.2)(x), 0.0)

    def test_predictor_extrapolates(self):
        s1 = FieldPair(2 * self.s0.U, 3 * self.s0.V, 0.1)
        pr = predictor((self.s0, s1), self.p, self.op, 0.1)
        np.testing.assert_allclose(pr.U, 2.5 * self.s0.U)
        np.testing.assert_allclose(pr.V, 4.0 * self.s0.V)
        assert pr.t == pytest.approx(0.15)

    def test_first_predictor_is_half_step_accurate(self):
        tau = 1e-3
        mats = build_step_matrices(self.p, self.op, tau)
        pr = predictor((self.s0,), self.p, self.op, tau)
        half, _ = fixed_point_halfstep(self.s0, pr, mats, self.p)
        assert np.max(np.abs(pr.U - half.U)) < 1e-6 * np.max(np.abs(self.s0.U))

    def test_halfstep_scalar_linear_case(self):
        # only gamma active: U^{k+1/2} = U / (1 - tau gamma / 2)
        p = ModelParams(1.5, 0, 0, 0, 0, 0, 0, 0, 0, 0.4, -0.6, test_mode=True)
        tau = 0.1
        mats = build_step_matrices(p, self.op, tau)
        s = FieldPair(self.s0.U, np.zeros_like(self.s0.V))
        half, rep = fixed_point_halfstep(s, s, mats, p)
        np.testing.assert_allclose(half.U, s.U / (1 - tau * 0.4 / 2), rtol=1e-13, atol=1e-16)
        assert rep.converged and rep.iterations <= 2

    def test_non_convergence_carries_report(self):
        mats = build_step_matrices(self.p, self.op, 0.1)
        with pytest.raises(NonConvergenceError) as ei:
            fixed_point_halfstep(self.s0, self.s0, mats, self.p, tol=1e-14, max_iter=1)
        rep = ei.value.report
        assert rep.iterations == 1 and not rep.converged and rep.final_update > 1e-14

    def test_bad_tol(self):
        mats = build_step_matrices(self.p, self.op, 0.1)
        with pytest.raises(InputError):
            fixed_point_halfstep(self.s0, self.s0, mats, self.p, tol=0.0)

    def test_dense_and_krylov_agree(self):
        nxt = {}
        for m in ("dense", "krylov"):
            mats = build_step_matrices(self.p, self.op, 0.05, m)
            nxt[m], _ = step((self.s0,), mats, self.p)
        assert np.max(np.abs(nxt["dense"].U - nxt["krylov"].U)) < 1e-11

    def test_unknown_linear_solver(self):
        with pytest.raises(ConfigError):
            build_step_matrices(self.p, self.op, 0.1, "cholesky")


class TestRun:
    def test_zero_stays_zero(self):
        p = params()
        r = run(p, Grid1D(-1.0, 1.0, 16), 10, lambda x: 0 * x, lambda x: 0 * x)
        assert np.all(r.final.U == 0) and np.all(r.final.V == 0)
        assert r.bound_ok

    def test_linear_recurrence_against_dense_oracle(self):
        p = ModelParams(1.5, 0.2, 0.2, 0.3, 0.3, 0, 0, 0, 0, 0.1, 0.1, test_mode=True)
        g = Grid1D(-1.0, 1.0, 24)
        op = assemble(1.5, g)
        nt, tau = 40, 1 / 40
        u0 = gauss(0.1)
        r = run(p, g, nt, u0, lambda x: 0 * x)
        A, B = op.A_dense(), op.B_dense()
        M = (1 - tau * 0.1 / 2) * A - tau / 2 * (0.2 + 0.3j) * B
        S = 2 * np.linalg.solve(M, A) - np.eye(g.n_interior)
        ref = np.linalg.matrix_power(S, nt) @ u0(g.interior)
        assert np.max(np.abs(r.final.U - ref)) <= 1e-12 * np.max(np.abs(ref))
        assert np.all(r.final.V == 0)

    def test_a_weighted_mass_conserved(self):
        # pure dispersion: the scheme conserves (A U, U)_h exactly, not the plain l2 mass
        from fgl.operators import apply_A

        p = ModelParams(1.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0, 0, test_mode=True)
        g = Grid1D(-1.0, 1.0, 32)
        op = assemble(1.5, g)
        mass = lambda U: float(np.vdot(U, apply_A(op, U)).real)  # noqa: E731
        states = []
        run(p, g, 20, gauss(0.0), lambda x: 0 * x, callbacks=[lambda k, s: states.append(s.U)], op=op)
        m = np.array([mass(U) for U in states])
        assert np.max(np.abs(m - m[0])) <= 1e-12 * m[0]

    def test_energy_bound_and_iterations(self):
        p = params()
        r = run(p, Grid1D(-1.0, 1.0, 40), 20, gauss(-0.3), gauss(0.3))
        assert r.bound_ok and r.step_condition_ok
        assert r.iterations.max() <= 15
        assert len(r.trace.t) == 21

    def test_warns_when_step_too_large(self):
        p = params(gamma1=1.2, gamma2=1.2)
        with pytest.warns(RuntimeWarning, match="exceeds 1/2"):
            r = run(p, Grid1D(-1.0, 1.0, 16), 2, lambda x: 0.1 * gauss(0.0)(x), lambda x: 0 * x)
        assert not r.step_condition_ok

    def test_failure_attaches_partial_result(self):
        p = params()
        with pytest.raises(NonConvergenceError) as ei:
            run(p, Grid1D(-1.0, 1.0, 16), 5, gauss(0.0), gauss(0.0), max_iter=1)
        assert ei.value.result.error is ei.value
        r = run(p, Grid1D(-1.0, 1.0, 16), 5, gauss(0.0), gauss(0.0), max_iter=1, raise_on_failure=False)
        assert isinstance(r.error, NonConvergenceError)

    def test_callbacks_and_determinism(self):
        seen = []
        p = params()
        g = Grid1D(-1.0, 1.0, 20)
        r1 = run(p, g, 6, gauss(0.0), gauss(0.1), callbacks=[lambda k, s: seen.append(k)])
        r2 = run(p, g, 6, gauss(0.0), gauss(0.1))
        assert seen == list(range(7))
        assert np.array_equal(r1.final.U, r2.final.U) and np.array_equal(r1.final.V, r2.final.V)

    def test_bad_inputs(self):
        p = params()
        g = Grid1D(-1.0, 1.0, 16)
        with pytest.raises(InputError):
            run(p, g, 0, gauss(0.0), gauss(0.0))
        with pytest.raises(InputError):
            run(p, g, 4)
        with pytest.raises(InputError):
            run(p, g, 4, lambda x: np.full_like(x, np.nan), gauss(0.0))


class TestConvergence:
    def _final(self, p, nx, nt):
        return run(p, Grid1D(-1.0, 1.0, nx), nt, lambda x: 0.8 * gauss(-0.2, 0.2)(x),
                   lambda x: 0.8 * gauss(0.2, 0.2)(x)).final

    def test_temporal_second_order(self):
        p = params(beta1=0.05, beta2=0.05, eta1=0.1, eta2=0.1)
        ref = self._final(p, 64, 640)
        errs = [np.max(np.abs(self._final(p, 64, nt).U - ref.U)) for nt in (10, 20, 40)]
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all((1.9 < orders) & (orders < 2.1))

    def test_spatial_fourth_order_alpha_two(self):
        p = params(alpha=2.0, beta1=0.05, beta2=0.05, eta1=0.1, eta2=0.1)
        nt = 400
        ref = self._final(p, 256, nt)
        errs = []
        for nx in (32, 64):
            U = self._final(p, nx, nt).U
            s = 256 // nx
            errs.append(np.max(np.abs(U - ref.U[s - 1 :: s])))
        assert 3.7 < math.log2(errs[0] / errs[1]) < 4.3


def test_energy_matches_l2h():
    g = Grid1D(0.0, 1.0, 4)
    s = FieldPair(np.array([1.0, 2.0, 0.0]), np.array([0.0, 1j, 1.0]))
    assert energy(s, g) == pytest.approx(0.25 * (1 + 4 + 1 + 1), rel=1e-15)


def test_no_warning_in_normal_runs():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run(params(), Grid1D(-1.0, 1.0, 16), 4, gauss(0.0), gauss(0.0))
