"""Periodic approximation baseline for the 1-D photonic quasicrystal.

The irrational ratio ``beta = (sqrt(5) - 1) / 2`` is replaced by ``r = m / (2L)``
with ``m`` an integer near ``(sqrt(5) - 1) L``.  The coefficient
``c (cos(2 pi x) + cos(2 pi r x)) + 1`` is then periodic, and the problem is
solved on one supercell with the same Fourier machinery as the projection
method (``n = 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np

from .eigensolver import EigenResult, SolveOptions, build_preconditioner, solve_dense, solve_iterative
from .lattice import ProjectionMatrix
from .operator import DENSE_MAX_MODES, assemble_dense, matrix_free
from .qpfield import TrigField

getcontext().prec = 50
SQRT5_MINUS_1 = Decimal(5).sqrt() - 1
BETA = float(SQRT5_MINUS_1 / 2)

# coefficient variants: the printed PAM formula drops the 1/2 in front of the cosines
VARIANT_AMPLITUDE = {"half-scaled": 0.5, "as-printed": 1.0}


@dataclass(frozen=True)
class RationalApproximation:
    L: int
    numerator: int
    e_def: float
    e_scaled: float

    @property
    def approximant(self) -> Fraction:
        return Fraction(self.numerator, 2 * self.L)


def _numerator(L: int, rule: str) -> int:
    if rule == "floor":
        # floor(sqrt(5) L) - L exactly, via the integer square root of 5 L^2
        return math.isqrt(5 * L * L) - L
    if rule == "nearest":
        return int((SQRT5_MINUS_1 * L).to_integral_value())
    raise ValueError(f"unknown numerator rule {rule!r}")


def diophantine_error(L: int, rule: str = "nearest") -> RationalApproximation:
    """Numerator and both error scalings for denominator ``2L``.

    ``e_def = |beta - m/(2L)|`` and ``e_scaled = |(sqrt(5)-1) L - m| = 2L e_def``.
    """
    m, gap = _gap(L, rule)
    return RationalApproximation(L, m, float(gap / (2 * L)), float(gap))


def _gap(L: int, rule: str) -> tuple[int, Decimal]:
    if L < 1:
        raise ValueError("L must be a positive integer")
    m = _numerator(L, rule)
    return m, abs(SQRT5_MINUS_1 * L - m)


def best_denominators(Lmax: int, rule: str = "nearest", metric: str = "e_def") -> list[int]:
    """Record-setting ``L <= Lmax`` by exhaustive scan.

    ``metric="e_def"`` ranks by ``|beta - m/(2L)|`` (best approximations of
    the first kind); ``metric="e_scaled"`` by ``|(sqrt(5)-1) L - m|``.
    """
    if Lmax < 1:
        raise ValueError("Lmax must be positive")
    if metric not in ("e_def", "e_scaled"):
        raise ValueError(f"unknown metric {metric!r}")
    best = None
    out = []
    seen: set[Fraction] = set()
    for L in range(1, Lmax + 1):
        m, gap = _gap(L, rule)
        if metric == "e_def":
            # L = 3 * 17 gives the same approximant as L = 17, hence exactly
            # the same e_def; rounding must not turn that tie into a record
            r = Fraction(m, 2 * L)
            if r in seen:
                continue
            seen.add(r)
        e = gap / (2 * L) if metric == "e_def" else gap
        if best is None or e < best:
            best = e
            out.append(L)
    return out


def pam_problem(L: int, rule: str = "nearest", variant: str = "half-scaled") -> tuple[TrigField, ProjectionMatrix, Fraction]:
    """Supercell coefficient and 1-D frequency scaling for denominator ``L``.

    With ``r = p/q`` in lowest terms every frequency of the approximating
    coefficient is a multiple of ``2 pi / q``, so the supercell problem is the
    ``n = 1`` lift with ``P = (2 pi / q)`` and modes at ``+-q`` and ``+-p``.
    """
    if variant not in VARIANT_AMPLITUDE:
        raise ValueError(f"unknown coefficient variant {variant!r}")
    approx = diophantine_error(L, rule)
    r = approx.approximant
    p, q = r.numerator, r.denominator
    c = VARIANT_AMPLITUDE[variant]
    terms = {(0,): 1.0, (q,): c / 2, (-q,): c / 2}
    for k in ((p,), (-p,)):
        terms[k] = terms.get(k, 0.0) + c / 2
    return TrigField(1, terms), ProjectionMatrix(np.array([[2 * np.pi / q]])), r


def pam_solve(
    L: int,
    N: int,
    m: int,
    rule: str = "nearest",
    variant: str = "half-scaled",
    opts: SolveOptions | None = None,
    max_dense: int = DENSE_MAX_MODES,
) -> EigenResult:
    """Smallest ``m`` eigenpairs of the supercell problem with ``D = L*N`` modes."""
    coeff, P, _ = pam_problem(L, rule, variant)
    D = L * N
    opts = opts or SolveOptions(m=m, mode="dense" if D <= 6000 else "iterative")
    opts = SolveOptions(**{**opts.__dict__, "m": m})
    if opts.mode == "dense":
        if D > max_dense:
            raise ValueError(f"D = {D} modes exceed the dense limit {max_dense}")
        return solve_dense(assemble_dense(coeff, P, D, max_modes=max_dense), opts)
    op = matrix_free(coeff, P, D)
    return solve_iterative(op, build_preconditioner(op), opts)


@dataclass
class ComparisonRow:
    state: int
    pm_eigenvalue: float
    pam_eigenvalue: float
    abs_diff: float
    rel_diff: float


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    pm_seconds: float
    pam_seconds: float


def compare_pm_pam(
    pm: EigenResult,
    pam: EigenResult,
    m: int,
    pm_states: list[int] | None = None,
    pam_states: list[int] | None = None,
) -> Comparison:
    """Per-state eigenvalue differences for already matched states.

    ``pm_states[j]`` and ``pam_states[j]`` index the same physical state in the
    two results; identity when omitted.
    """
    pm_states = list(range(m)) if pm_states is None else list(pm_states)[:m]
    pam_states = list(range(m)) if pam_states is None else list(pam_states)[:m]
    if len(pm_states) < m or len(pam_states) < m:
        raise ValueError(f"need {m} matched states on each side")
    for res, idx, name in ((pm, pm_states, "PM"), (pam, pam_states, "PAM")):
        if max(idx) >= res.m or not np.all(res.converged[idx]):
            raise ValueError(f"{name} result has fewer than {m} converged pairs")
    rows = []
    for j, (a, b) in enumerate(zip(pm_states, pam_states)):
        g, gl = float(pm.eigenvalues[a]), float(pam.eigenvalues[b])
        rows.append(ComparisonRow(j, g, gl, abs(g - gl), abs(g - gl) / abs(g)))
    return Comparison(rows, pm.wall_time, pam.wall_time)


def pm_to_pam_modes(pm_indices: np.ndarray, approximant: Fraction) -> np.ndarray:
    """Supercell mode of each torus mode ``(k1, k2)`` once ``beta -> p/q``.

    ``2 pi (k1 + r k2) = (2 pi / q)(q k1 + p k2)``.
    """
    p, q = approximant.numerator, approximant.denominator
    return q * pm_indices[:, 0] + p * pm_indices[:, 1]
