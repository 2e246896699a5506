"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (add ``-m "not slow"`` to skip the
minute-scale reproductions).  The verdict lines are repeated in the terminal
summary under "acceptance criteria".
"""

import math

import numpy as np
import pytest

from qeo.eigensolver import build_preconditioner
from qeo.harness import builtin_example, run_condition_report, run_convergence_study, run_pam_comparison
from qeo.lattice import ProjectionMatrix, build_index_set
from qeo.operator import assemble_dense, matrix_free
from qeo.pam import diophantine_error
from qeo.qpfield import TrigField, interpolate, line_mean_estimate, sobolev_norm, truncate

EXAMPLES = {i: builtin_example(i) for i in (1, 2, 3)}

# target values
COND_Q = {8: 1.8848e03, 16: 1.2779e05, 32: 5.1708e05, 64: 3.8355e07}
COND_MQ = {8: 4.16, 16: 4.40, 32: 4.76, 64: 4.77}
REF_3D_ERRORS = {
    1: [4.4322e-05, 4.2692e-07, 3.8024e-09, 3.2880e-11, 2.7711e-13],
    2: [5.1589e-05, 4.6952e-07, 4.0744e-09, 3.4962e-11, 2.9132e-13],
    3: [0.0499, 1.1096e-04, 7.6371e-07, 1.0143e-08, 1.8659e-13],
}
REF_DIOPHANTINE = {17: 1.3156e-02, 72: 3.1056e-03, 144: 6.2112e-02, 233: 3.8358e-03, 305: 7.3314e-04, 377: 2.3752e-03}
REF_PAM_ERR1 = {233: 1.7000e-03, 305: 2.4649e-04}
REF_PAM_ERR2 = {233: 6.8000e-03, 305: 9.8976e-04}
DIOPHANTINE_OUTLIER = 144


@pytest.fixture(scope="module")
def example1_study():
    return run_convergence_study(EXAMPLES[1])


def test_c1_dense_matches_matrix_free(criterion):
    worst = 0.0
    for ex, cfg in EXAMPLES.items():
        A, P = cfg.field(), cfg.projection()
        for N in (4, 8):
            dense = assemble_dense(A, P, N)
            mf = matrix_free(A, P, N)
            rng = np.random.default_rng(100 * ex + N)
            U = rng.standard_normal((mf.size, 20)) + 1j * rng.standard_normal((mf.size, 20))
            ref = dense.matrix @ U
            rel = np.linalg.norm(ref - mf.matvec(U), axis=0) / np.linalg.norm(ref, axis=0)
            worst = max(worst, float(rel.max()))
    assert criterion(1, worst <= 1e-12, f"max relative difference {worst:.2e} (limit 1e-12)")


def test_c2_hermitian_and_coercive(criterion):
    cases = {1: (4, 8, 16), 2: (4, 8, 16), 3: (4, 8)}  # 16^4 modes do not fit densely
    worst_h, worst_lam = 0.0, math.inf
    for ex, Ns in cases.items():
        cfg = EXAMPLES[ex]
        for N in Ns:
            Q = assemble_dense(cfg.field(), cfg.projection(), N).matrix
            worst_h = max(worst_h, float(np.linalg.norm(Q - Q.conj().T) / np.linalg.norm(Q)))
            worst_lam = min(worst_lam, float(np.linalg.eigvalsh(Q)[0]))
    ok = worst_h <= 1e-12 and worst_lam >= 1 - 1e-8
    assert criterion(2, ok, f"max hermitian defect {worst_h:.2e}, min eigenvalue {worst_lam:.12f}")


@pytest.mark.slow
def test_c3_condition_numbers(criterion):
    cfg = EXAMPLES[1]
    rows = run_condition_report(cfg, [8, 16, 32, 64])
    parts, ok = [], True
    for r in rows:
        mq_ok = abs(r.cond_MQ - COND_MQ[r.N]) <= 0.05 * COND_MQ[r.N]
        ok &= mq_ok
        parts.append(f"N={r.N}: cond(Q)={r.cond_Q:.4e} [{COND_Q[r.N]:.4e}] cond(MQ)={r.cond_MQ:.3f} [{COND_MQ[r.N]}]")
    cq = [r.cond_Q for r in rows]
    grows = all(a < b for a, b in zip(cq, cq[1:]))
    top = cq[-1]
    ok &= grows and top >= 1e7 and COND_Q[64] / 5 <= top <= 5 * COND_Q[64]
    # the norm behind the target values is unknown; the 1-norm is shown for comparison
    op = assemble_dense(cfg.field(), cfg.projection(), 8)
    M = build_preconditioner(op)
    one_q = abs(np.linalg.cond(op.matrix, 1))
    one_mq = abs(np.linalg.cond(M.entries[:, None] * op.matrix, 1))
    parts.append(f"1-norm at N=8: cond(Q)={one_q:.4e} cond(MQ)={one_mq:.3f}")
    assert criterion(3, ok, "; ".join(parts))


@pytest.mark.slow
def test_c4_three_dimensional_errors(criterion):
    cfg = EXAMPLES[3]
    study = run_convergence_study(cfg)
    Ns = cfg.N_list
    floor = 1e-12
    ok = True
    parts = []
    for state in (1, 2, 3):
        errs = [r.eigenvalue_error for r in study.records if r.state == state]
        for N, e, expected in zip(Ns, errs, REF_3D_ERRORS[state]):
            within = expected / 3 <= e <= 3 * expected
            ok &= within
            if not within:
                parts.append(f"state {state} N={N}: {e:.4e} vs {expected:.4e}")
        for a, b in zip(errs, errs[1:]):
            if b > floor and b > a / 10:
                ok = False
                parts.append(f"state {state}: ratio {a / b:.1f} below 10")
        parts.append(f"state {state} errors " + " ".join(f"{e:.3e}" for e in errs))
    assert criterion(4, ok, "; ".join(parts))


@pytest.mark.slow
def test_c5_example1_monotone(criterion, example1_study):
    ok = True
    parts = []
    for state in (1, 2):
        recs = [r for r in example1_study.records if r.state == state]
        ev = [r.eigenvalue_error for r in recs]
        ef = [r.eigenfunction_error for r in recs]
        dec = all(a > b for a, b in zip(ev, ev[1:])) and all(a > b for a, b in zip(ef, ef[1:]))
        ok &= dec
        parts.append(
            f"state {state}: eigenvalue " + " ".join(f"{e:.3e}" for e in ev)
            + "; eigenfunction " + " ".join(f"{e:.3e}" for e in ef)
            + ("" if dec else " (not strictly decreasing)")
        )
    assert criterion(5, ok, "; ".join(parts))


@pytest.mark.slow
def test_c6_pam_reproduction(criterion, example1_study):
    cfg = EXAMPLES[1]
    ok = True
    parts = []
    for L, expected in REF_DIOPHANTINE.items():
        got = diophantine_error(L, "nearest").e_scaled
        same = f"{got:.4e}" == f"{expected:.4e}"
        if L == DIOPHANTINE_OUTLIER:
            parts.append(f"L={L} e_scaled {got:.4e} vs {expected:.4e} (known outlier, not scored)")
            continue
        ok &= same
        if not same:
            parts.append(f"L={L} e_scaled {got:.4e} vs {expected:.4e}")

    rows = run_pam_comparison(cfg, list(REF_PAM_ERR1), N=16, study=example1_study)
    for r in rows:
        within = REF_PAM_ERR1[r.L] / 5 <= r.gamma_err_1 <= 5 * REF_PAM_ERR1[r.L]
        ok &= within
        parts.append(
            f"L={r.L} err1 {r.gamma_err_1:.4e} vs {REF_PAM_ERR1[r.L]:.4e}{'' if within else ' (outside 5x)'}"
            f", err2 {r.gamma_err_2:.4e} vs {REF_PAM_ERR2[r.L]:.4e}"
        )

    # fixed supercell, refined resolution: the error must level off
    sat = []
    for N in (32, 64, 128):
        (row,) = run_pam_comparison(cfg, [17], N=N, study=example1_study)
        sat.append(row.gamma_err_1)
    flat = all(b >= 0.5 * a for a, b in zip(sat, sat[1:]))
    ok &= flat
    parts.append("L=17 err1 at N=32,64,128: " + " ".join(f"{e:.3e}" for e in sat) + ("" if flat else " (still improving)"))
    assert criterion(6, ok, "; ".join(parts))


def test_c7_preconditioner_optimal(criterion):
    cfg = EXAMPLES[1]
    op = assemble_dense(cfg.field(), cfg.projection(), 8)
    Q = op.matrix
    M = build_preconditioner(op).entries
    eye = np.eye(len(Q))
    best = np.linalg.norm(M[:, None] * Q - eye)
    rng = np.random.default_rng(7)
    margins = []
    for _ in range(100):
        spread = 10.0 ** rng.uniform(-4, 0)
        D = M * np.exp(spread * rng.standard_normal(len(M)))
        margins.append(np.linalg.norm(D[:, None] * Q - eye) - best)
    worst = float(min(margins))
    assert criterion(7, worst >= 0, f"||MQ-I||_F = {best:.6f}, smallest excess over 100 draws {worst:.3e}")


def _decaying(n: int, rate: float, K: int, seed: int) -> TrigField:
    rng = np.random.default_rng(seed)
    terms = {}
    for k in np.ndindex(*(2 * K + 1,) * n):
        k = tuple(v - K for v in k)
        terms[k] = math.exp(-rate * sum(abs(v) for v in k)) * complex(*rng.uniform(0.5, 1.5, 2))
    return TrigField(n, terms)


def _folded_sum(F: TrigField, N: int) -> dict:
    out: dict = {}
    h = N // 2
    for k, c in F.terms.items():
        key = tuple((v + h) % N - h for v in k)
        out[key] = out.get(key, 0) + c
    return out


def test_c8_approximation_properties(criterion):
    cases = [
        (_decaying(1, 2.0, 60, 0), ProjectionMatrix(np.array([[1.0]]))),
        (_decaying(2, 2.5, 24, 1), ProjectionMatrix(2 * np.pi * np.array([[1.0, (math.sqrt(5) - 1) / 2]]))),
    ]
    ok = True
    parts = []
    for F, P in cases:
        for name, op in (("truncation", truncate), ("interpolation", interpolate)):
            errs = [sobolev_norm(F - op(F, N).to_trig_field(), P, 1.0) for N in (4, 8, 16, 32)]
            dec = all(b <= a / 10 for a, b in zip(errs, errs[1:]))
            ok &= dec
            parts.append(f"n={F.n} {name} " + " ".join(f"{e:.2e}" for e in errs))
    # aliasing: each interpolated coefficient is the sum of the modes folding onto it
    worst = 0.0
    for F, _ in cases:
        for N in (4, 5, 8):
            c = interpolate(F, N)
            folded = _folded_sum(F, N)
            iset = build_index_set(N, F.n)
            expect = np.array([folded.get(tuple(int(v) for v in k), 0) for k in iset.indices])
            worst = max(worst, float(np.max(np.abs(c.coeffs - expect))))
    ok &= worst <= 1e-14
    parts.append(f"aliasing identity max deviation {worst:.1e}")
    assert criterion(8, ok, "; ".join(parts))


def test_c9_ergodic_mean(criterion):
    cfg = EXAMPLES[1]
    T = 1e4
    est = line_mean_estimate(cfg.field(), cfg.projection(), T, int(40 * T) + 1)
    err = abs(est - 1.0)
    assert criterion(9, err < 1e-2, f"mean over [-T, T] at T=1e4 is {est.real:.8f}, error {err:.2e}")
