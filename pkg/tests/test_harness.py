import math
import os

import numpy as np
import pytest

from sfnide.brownian import coarsen, sample_path
from sfnide.errors import DomainError, NonFiniteStateError
from sfnide.harness import (ConvergenceStudy, continuous_dependence_probe, convergence_study,
                            coupled_error, coupled_terminals, fit_rate, write_study_csv,
                            write_study_svg)
from sfnide.model import EXAMPLE1_PARAMETER_SETS, FractionalOrders, Grid, ProblemSpec, example1, linear_test
from sfnide.solver import em_solve


def test_zero_problem_error_is_zero():
    problem = linear_test(0.5, (0.6,))
    assert coupled_error(problem, 16, 70, 3) == 0.0


def test_deterministic_fixture_independent_of_seed_and_paths():
    problem = linear_test(0.5, coef_g0=1.0)
    coarse = em_solve(problem, Grid(32, 1.0), sample_path(0, 0, Grid(32, 1.0))).terminal
    fine = em_solve(problem, Grid(64, 1.0), sample_path(0, 0, Grid(64, 1.0))).terminal
    gap = abs(coarse[0] - fine[0])
    for seed, m in ((1, 5), (2, 130)):
        assert coupled_error(problem, 32, m, seed) == pytest.approx(gap, rel=1e-14)


def test_example1_refines():
    problem = example1(0.4, 0.5, 0.6, 0.4)
    e64 = coupled_error(problem, 64, 1000, 11, workers=4)
    e128 = coupled_error(problem, 128, 1000, 11, workers=4)
    assert math.isfinite(e64) and e128 < e64


def test_coarse_run_is_em_on_coarsened_path():
    problem = example1(0.8, 0.9, 0.6, 0.4)
    coarse, fine = coupled_terminals(problem, 16, 3, 99)
    for i in range(3):
        fine_path = sample_path(99, i, Grid(32, 1.0))
        assert em_solve(problem, Grid(16, 1.0), coarsen(fine_path)).terminal.tobytes() == \
            coarse[i].tobytes()
        assert em_solve(problem, Grid(32, 1.0), fine_path).terminal.tobytes() == \
            fine[i].tobytes()


def test_estimator_stability():
    problem = example1(0.4, 0.5, 0.6, 0.4)
    m = 500
    e1 = coupled_error(problem, 32, m, 5, workers=4)
    e2 = coupled_error(problem, 32, 2 * m, 5, workers=4)
    assert abs(e2 - e1) < 5 * e1 / math.sqrt(m)


def test_fit_rate_exact_power_laws():
    h = np.array([1 / 8, 1 / 16, 1 / 32, 1 / 64])
    slope, intercept, residual = fit_rate(h, 3.0 * h)
    assert slope == pytest.approx(1.0, abs=1e-12)
    assert intercept == pytest.approx(math.log2(3.0), abs=1e-12)
    assert residual < 1e-12
    slope, _, _ = fit_rate(h, 0.7 * h ** 0.4)
    assert slope == pytest.approx(0.4, abs=1e-12)


def test_fit_rate_errors():
    with pytest.raises(DomainError):
        fit_rate([0.1, 0.05], [1.0, 0.5])
    with pytest.raises(DomainError):
        fit_rate([0.1, 0.05, 0.025], [1.0, 0.0, 0.5])
    with pytest.raises(DomainError):
        fit_rate([0.1, 0.1, 0.1], [1.0, 0.5, 0.2])


def test_deterministic_fixture_slope():
    problem = linear_test(0.5, coef_g0=1.0)
    study = convergence_study(problem, (64, 128, 256, 512), 1, 0)
    assert study.slope >= 0.5 - 0.05
    assert all(e > 0 for e in study.errors)


def test_study_validation():
    problem = linear_test(0.5, coef_g0=1.0)
    with pytest.raises(DomainError):
        convergence_study(problem, (8, 16), 1, 0)
    with pytest.raises(DomainError):
        convergence_study(problem, (8, 16, 24), 1, 0)
    # zero error on some level cannot be fitted
    with pytest.raises(NonFiniteStateError, match="not positive"):
        convergence_study(linear_test(0.5), (4, 8, 16), 2, 0)


def test_study_files_are_reproducible(tmp_path):
    problem = example1(0.4, 0.5, 0.6, 0.4)
    paths = []
    for k in range(2):
        study = convergence_study(problem, (8, 16, 32), 40, 2024, workers=1 + k)
        csv = tmp_path / f"s{k}.csv"
        svg = tmp_path / f"s{k}.svg"
        write_study_csv(study, csv, "0.1.0")
        write_study_svg(study, svg)
        paths.append((csv, svg))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()
    text = paths[0][0].read_text()
    for needle in ("# seed=2024", "# paths=40", "# levels=8,16,32", "# quad_order=16",
                   "# generator=", "N,h,e,log2h,log2e"):
        assert needle in text
    rows = [line for line in text.splitlines() if not line.startswith("#")][1:]
    assert len(rows) == 3
    assert "<svg" in paths[0][1].read_text()


def test_shared_paths_option():
    problem = example1(0.4, 0.5, 0.6, 0.4)
    per_level = convergence_study(problem, (4, 8, 16), 10, 1)
    shared = convergence_study(problem, (4, 8, 16), 10, 1, shared_paths=True)
    assert shared.metadata["seed_derivation"] == "shared"
    assert per_level.errors != shared.errors
    assert shared.errors[0] == coupled_error(problem, 4, 10, 1)


def test_example1_sets_run_at_small_scale():
    for params in EXAMPLE1_PARAMETER_SETS:
        study = convergence_study(example1(*params), (4, 8, 16), 8, 0)
        assert isinstance(study, ConvergenceStudy)
        assert len(study.errors) == 3 and np.isfinite(study.slope)


def test_solver_failure_carries_level():
    orders = FractionalOrders(0.9)
    problem = ProblemSpec(1, 1, orders, (), lambda t, z: z * 1e250,
                          lambda t, s, z: np.zeros(z.shape),
                          lambda t, s, z: np.zeros(z.shape + (1,)), [1.0])
    with pytest.raises(NonFiniteStateError, match="level 0") as info, \
            np.errstate(over="ignore", invalid="ignore"):
        convergence_study(problem, (8, 16, 32), 3, 0)


def test_continuous_dependence_trivial_cases():
    zero = linear_test(0.5, z0=1.0)
    table = continuous_dependence_probe(zero, [0.1, 0.05, 0.0], 16, 20, 0)
    for delta, msd in table:
        assert msd == ((1.0 + delta) - 1.0) ** 2
    assert table[-1][1] == 0.0
    with pytest.raises(DomainError):
        continuous_dependence_probe(zero, [0.05, 0.1], 16, 4, 0)
    with pytest.raises(DomainError):
        continuous_dependence_probe(zero, [-0.1], 16, 4, 0)
