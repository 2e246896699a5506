import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from qeo.eigensolver import SolveOptions, solve_dense
from qeo.operator import assemble_dense
from qeo.pam import (
    BETA,
    best_denominators,
    compare_pm_pam,
    diophantine_error,
    pam_problem,
    pam_solve,
    pm_to_pam_modes,
)
from qeo.qpfield import TrigField


def _oracle_gap(L: int) -> float:
    # independent high-precision distance of (sqrt5 - 1) L to the nearest integer
    getcontext().prec = 60
    x = (Decimal(5).sqrt() - 1) * L
    return float(abs(x - x.to_integral_value()))


def test_table_values():
    assert f"{diophantine_error(17).e_scaled:.4e}" == "1.3156e-02"
    assert f"{diophantine_error(305).e_scaled:.4e}" == "7.3314e-04"
    assert diophantine_error(17).e_def == pytest.approx(1.3156e-02 / 34, rel=1e-4)
    assert f"{diophantine_error(17).e_def:.4e}" == "3.8693e-04"


@pytest.mark.parametrize("L", [1, 2, 17, 72, 144, 233, 305, 377, 987, 12345])
def test_scaled_is_2L_times_def(L):
    a = diophantine_error(L)
    assert a.e_scaled == pytest.approx(2 * L * a.e_def, rel=1e-14)
    assert a.e_scaled == pytest.approx(_oracle_gap(L), rel=1e-12, abs=1e-15)
    assert a.e_def == pytest.approx(abs(BETA - a.numerator / (2 * L)), rel=1e-9, abs=1e-16)


def test_floor_rule_matches_float_floor():
    for L in range(1, 400):
        a = diophantine_error(L, "floor")
        assert a.numerator == math.floor((math.sqrt(5) - 1) * L)


def test_nearest_minimizes():
    for L in range(1, 300):
        a = diophantine_error(L, "nearest")
        x = (math.sqrt(5) - 1) * L
        assert abs(x - a.numerator) <= min(abs(x - a.numerator - 1), abs(x - a.numerator + 1))


def test_rule_errors():
    with pytest.raises(ValueError):
        diophantine_error(0)
    with pytest.raises(ValueError):
        diophantine_error(5, "ceil")


def test_best_denominators():
    rec = best_denominators(500)
    assert {17, 72, 233, 305} <= set(rec)
    assert best_denominators(1) == [1]
    errs = [diophantine_error(L).e_def for L in rec]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    # exhaustive oracle in 80-digit decimals; equal approximants tie exactly
    getcontext().prec = 80
    beta = (Decimal(5).sqrt() - 1) / 2
    best, expect = None, []
    for L in range(1, 501):
        m = int(((Decimal(5).sqrt() - 1) * L).to_integral_value())
        r = Fraction(m, 2 * L)
        e = abs(beta - Decimal(r.numerator) / Decimal(r.denominator))
        if best is None or e < best - Decimal(10) ** -60:
            best = e
            expect.append(L)
    assert rec == expect


def test_best_denominators_scaled_metric():
    rec = best_denominators(500, metric="e_scaled")
    errs = [diophantine_error(L).e_scaled for L in rec]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert {17, 72, 305} <= set(rec)
    with pytest.raises(ValueError):
        best_denominators(10, metric="other")
    with pytest.raises(ValueError):
        best_denominators(0)


def test_pam_problem_structure():
    A, P, r = pam_problem(17)
    assert r == Fraction(21, 34)
    assert P.entries[0, 0] == pytest.approx(2 * np.pi / 34)
    assert A.terms == {(-34,): 0.25, (-21,): 0.25, (0,): 1.0, (21,): 0.25, (34,): 0.25}
    A2, _, _ = pam_problem(17, variant="as-printed")
    assert A2.terms[(34,)] == 0.5
    with pytest.raises(ValueError):
        pam_problem(17, variant="other")


def test_pam_coefficient_matches_approximant():
    A, P, r = pam_problem(72)
    x = np.linspace(-3, 3, 11)
    from qeo.qpfield import qp_evaluate

    expect = 0.5 * (np.cos(2 * np.pi * x) + np.cos(2 * np.pi * float(r) * x)) + 1
    assert np.allclose(qp_evaluate(A, P, x[:, None]).real, expect, atol=1e-12)


def test_pam_small_case_real_and_coercive():
    res = pam_solve(1, 16, 5)
    assert res.converged.all()
    assert np.all(res.eigenvalues >= 1 - 1e-10)
    assert pam_problem(1)[2] == Fraction(1, 2)


def test_pam_constant_coefficient_exact():
    _, P, r = pam_problem(17)
    D = 17 * 8
    op = assemble_dense(TrigField.constant(0.7, 1), P, D)
    res = solve_dense(op, SolveOptions(m=7, mode="dense"))
    q = r.denominator
    j = np.arange(D) - D // 2
    expect = np.sort(0.7 * (2 * np.pi * j / q) ** 2 + 1)[:7]
    assert np.allclose(res.eigenvalues, expect, rtol=1e-13)


def test_pam_iterative_path_agrees():
    a = pam_solve(17, 8, 4)
    b = pam_solve(17, 8, 4, opts=SolveOptions(mode="iterative"))
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)


def test_pam_dense_guard():
    with pytest.raises(ValueError):
        pam_solve(305, 16, 2, opts=SolveOptions(mode="dense"), max_dense=1000)


def test_compare_identical_results():
    res = pam_solve(17, 8, 3)
    cmp = compare_pm_pam(res, res, 3)
    assert all(r.abs_diff == 0 and r.rel_diff == 0 for r in cmp.rows)
    with pytest.raises(ValueError):
        compare_pm_pam(res, res, 4)


def test_pm_to_pam_modes():
    r = Fraction(21, 34)
    ks = np.array([[1, 0], [0, 1], [2, -3], [-1, 1]])
    assert pm_to_pam_modes(ks, r).tolist() == [34, 21, 5, -13]
