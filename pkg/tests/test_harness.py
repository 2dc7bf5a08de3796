import json

import numpy as np
import pytest

from fgl.errors import InputError
from fgl.harness import (
    EXAMPLE3_VARIANTS,
    PUBLISHED_TABLE1,
    convergence_experiment,
    convergence_windows,
    example3_run,
    invariant_suite,
    report_json,
    rows_as_dicts,
    table1_experiment,
    table_params,
)


class TestTable1:
    def test_published_cells(self):
        rows = {(r.alpha, round(1 / r.h)): r for r in table1_experiment()}
        for alpha, cells in PUBLISHED_TABLE1.items():
            for n, err, order in cells:
                r = rows[(alpha, n)]
                assert r.abs_error == pytest.approx(err, rel=0.02)
                if order is not None:
                    assert r.order == pytest.approx(order, abs=0.05)

    def test_off_grid_point(self):
        with pytest.raises(InputError):
            table1_experiment(alphas=(1.5,), hs=[1 / 201], x_eval=0.5)

    def test_rows_serialize(self):
        rows = table1_experiment(alphas=(2.0,), hs=[1 / 40, 1 / 80])
        d = rows_as_dicts(rows)
        assert d[0]["order"] is None and d[1]["order"] > 3.5
        json.dumps(d)


class TestConvergence:
    def test_table_params(self):
        assert table_params(2, 1.5).gamma1 == pytest.approx(2 / 23)
        assert table_params(3, 1.5).gamma_max == 480.0
        with pytest.raises(InputError):
            table_params(4, 1.5)

    def test_reference_against_itself_is_exact(self):
        p = table_params(2, 1.5)
        pairs = ((1 / 10, 1 / 5), (1 / 20, 1 / 10))
        rows = convergence_experiment(p, pairs, reference=(1 / 20, 1 / 10), check_reference=False)
        assert rows[-1].error_U == 0.0 and rows[-1].error_V == 0.0
        assert rows[0].error_U > 0

    def test_reference_step_precondition(self):
        p = table_params(2, 1.5)
        with pytest.raises(InputError):
            convergence_experiment(p, ((1 / 10, 1 / 5),), reference=(1 / 20, 1 / 10))

    def test_reference_grid_must_nest(self):
        p = table_params(2, 1.5)
        with pytest.raises(InputError):
            convergence_experiment(p, ((1 / 4, 1 / 5),), reference=(1 / 40, 1 / 7))

    def test_small_experiment_rows(self):
        p = table_params(2, 1.5)
        rows = convergence_experiment(p, ((1 / 5, 1 / 5), (1 / 10, 1 / 10)), reference=(1 / 80, 1 / 40))
        assert rows[0].temporal_order is None
        assert rows[1].temporal_order is not None and rows[1].error_ratio > 1
        assert all(r.bound_ok and r.step_condition_ok for r in rows)
        flags = convergence_windows(rows)
        assert set(flags) == {"temporal", "spatial", "ratio"}


class TestExample3:
    def test_unknown_variant(self):
        with pytest.raises(InputError):
            example3_run("fig9")

    def test_zero_fields_stay_zero(self):
        runs = example3_run("fig7.2", nx=32, nt=10, T=1.0, snapshot_times=(0.5,), n_frames=3, zero_fields=True)
        (r,) = runs
        assert np.all(r.absU == 0) and np.all(r.absV == 0)
        assert r.absU.shape == (3, 31)
        assert set(r.snapshots) == {0.5}

    def test_fig74_energy_ordered_by_gamma(self):
        runs = example3_run("fig7.4", nx=64, nt=40, T=2.0, snapshot_times=(), n_frames=2)
        finals = [r.energy_W[-1] for r in runs]
        assert [r.params.gamma1 for r in runs] == [0.5, 0.0, -0.5, -1.0]
        assert finals == sorted(finals, reverse=True)

    def test_variants_cover_figures(self):
        assert set(EXAMPLE3_VARIANTS) == {"fig7.1", "fig7.2", "fig7.3", "fig7.4"}
        assert [a for a, _ in EXAMPLE3_VARIANTS["fig7.1"]["runs"]] == [1.2, 1.5, 1.8, 2.0]


@pytest.fixture(scope="module")
def report():
    return invariant_suite(seed=0)


class TestInvariantSuite:
    def test_all_pass(self, report):
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        assert report["passed"], failed

    def test_deterministic(self, report):
        assert report_json(invariant_suite(seed=0)) == report_json(report)

    def test_detects_perturbed_coefficient(self):
        rep = invariant_suite(seed=0, perturb_kappa=(5, 1e-6))
        status = {c["name"]: c["passed"] for c in rep["checks"]}
        assert not rep["passed"]
        assert not status["coeffs.recursion_vs_direct"]
