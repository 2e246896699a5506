"""Smallest eigenpairs of the shifted operator.

Two routes: a dense Hermitian eigendecomposition (reference) and a
matrix-free locally optimal block preconditioned conjugate gradient
iteration driven by the Frobenius-optimal diagonal preconditioner

    M = argmin_{D diagonal} ||D Q - I||_F,   M_ii = q_ii / ||e_i^T Q||_2^2.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lattice import FrequencyIndexSet, ProjectionMatrix
from .operator import DENSE_MAX_MODES, DenseSizeError, SpectralOperator, diagonal, row_norms_squared
from .qpfield import CoefficientField, sobolev_norm

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
# converged residuals are only asked for down to this multiple of eps*||Q||
RESIDUAL_FLOOR = 64.0


@dataclass(frozen=True)
class DiagonalPreconditioner:
    entries: np.ndarray

    def __call__(self, R: np.ndarray) -> np.ndarray:
        return self.entries[:, None] * R if R.ndim == 2 else self.entries * R


@dataclass
class SolveOptions:
    m: int = 4
    tol: float = 1e-10
    max_iterations: int = 2000
    block_size: int | None = None
    seed: int = 0
    mode: str = "iterative"
    normalization: str = "l2"
    # check that the smallest Ritz value never increases
    debug: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one eigenpair")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.mode not in ("dense", "iterative"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.normalization not in ("l2", "h1p"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.block_size is not None and self.block_size < self.m:
            raise ValueError("block size must be at least m")

    @property
    def block(self) -> int:
        return self.block_size if self.block_size is not None else self.m + 4


@dataclass
class EigenResult:
    """Eigenpairs in ascending order.

    ``vectors`` holds the coefficient vectors column-wise; residual norms
    refer to the L2-unit versions of those vectors.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    index_set: FrequencyIndexSet
    residual_norms: np.ndarray
    iterations: int
    converged: np.ndarray
    normalization: str = "l2"
    tolerance: float = 0.0
    wall_time: float = 0.0
    ritz_history: list[float] = field(default_factory=list, repr=False)

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    @property
    def N(self) -> int:
        return self.index_set.N

    @property
    def eigenvectors(self) -> list[CoefficientField]:
        return [CoefficientField(self.index_set, self.vectors[:, j]) for j in range(self.m)]

    def unshifted(self) -> np.ndarray:
        """Eigenvalues of the operator without the identity shift."""
        return self.eigenvalues - 1.0


def build_preconditioner(op: SpectralOperator) -> DiagonalPreconditioner:
    rows = row_norms_squared(op)
    if np.any(rows <= 0) or not np.all(np.isfinite(rows)):
        raise ZeroDivisionError("operator has a zero or non-finite row norm")
    return DiagonalPreconditioner(diagonal(op) / rows)


def _phase_fix(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    a = v[i]
    if a == 0:
        return v
    out = v * (abs(a) / a)
    out[i] = abs(out[i])  # exactly real, not just to rounding
    return out


def normalize(vec, P: ProjectionMatrix, mode: str = "l2"):
    """Scale to unit L2 or H1_P norm and make the largest coefficient real positive.

    Accepts a :class:`CoefficientField` or a raw vector together with its
    field; returns the same kind it was given.
    """
    field_in = isinstance(vec, CoefficientField)
    if not field_in:
        raise TypeError("normalize expects a CoefficientField")
    v = vec.coeffs
    if not np.any(v):
        raise ValueError("cannot normalize the zero vector")
    if mode == "l2":
        nrm = float(np.linalg.norm(v))
    elif mode == "h1p":
        nrm = sobolev_norm(vec, P, 1.0)
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    return CoefficientField(vec.index_set, _phase_fix(v / nrm))


def _normalize_columns(V: np.ndarray, op: SpectralOperator, mode: str) -> np.ndarray:
    out = np.empty_like(V)
    for j in range(V.shape[1]):
        out[:, j] = normalize(CoefficientField(op.index_set, V[:, j]), op.P, mode).coeffs
    return out


def _residuals(op: SpectralOperator, V: np.ndarray, lam: np.ndarray) -> np.ndarray:
    AV = op.matrix @ V if op.matrix is not None else op.matvec(V)
    return np.linalg.norm(AV - V * lam, axis=0)


def hermitian_defect(Q: np.ndarray) -> float:
    return float(np.linalg.norm(Q - Q.conj().T) / np.linalg.norm(Q))


def solve_dense(op: SpectralOperator, opts: SolveOptions) -> EigenResult:
    if op.matrix is None:
        raise ValueError("solve_dense needs an assembled dense operator")
    t0 = time.perf_counter()
    Q = op.matrix
    defect = hermitian_defect(Q)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (relative defect {defect:.3e})")
    m = min(opts.m, op.size)
    H = 0.5 * (Q + Q.conj().T)
    lam, V = scipy.linalg.eigh(H, subset_by_index=[0, m - 1])
    V = _normalize_columns(V, op, "l2")
    res = _residuals(op, V, lam)
    if opts.normalization != "l2":
        V = _normalize_columns(V, op, opts.normalization)
    return EigenResult(
        eigenvalues=lam,
        vectors=V,
        index_set=op.index_set,
        residual_norms=res,
        iterations=1,
        converged=np.ones(m, dtype=bool),
        normalization=opts.normalization,
        tolerance=opts.tol,
        wall_time=time.perf_counter() - t0,
    )


def effective_tolerance(op: SpectralOperator, M: DiagonalPreconditioner | None, tol: float) -> float:
    """``tol`` raised to the attainable floor ``c * eps * ||Q||``.

    ``max_i ||e_i^T Q||`` is a lower bound on ``||Q||_2`` that is tight for
    these banded-in-frequency operators.
    """
    scale = float(np.sqrt(np.max(row_norms_squared(op))))
    return max(tol, RESIDUAL_FLOOR * np.finfo(float).eps * scale)


def _orthonormalize(V: np.ndarray, drop_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of range(V), dropping numerically dependent columns."""
    if V.shape[1] == 0:
        return V
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    keep = s > drop_tol * max(s[0], 1e-300)
    return U[:, keep]


def _project_out(W: np.ndarray, *bases: np.ndarray) -> np.ndarray:
    for _ in range(2):
        for B in bases:
            if B is not None and B.shape[1]:
                W = W - B @ (B.conj().T @ W)
    return W


def _rayleigh_ritz(S: np.ndarray, AS: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    H = S.conj().T @ AS
    H = 0.5 * (H + H.conj().T)
    return np.linalg.eigh(H)


def lobpcg(
    matvec,
    X0: np.ndarray,
    precond,
    m: int,
    tol: float,
    max_iterations: int,
    debug: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int, list[float]]:
    """Block iteration for the ``m`` smallest eigenpairs of a Hermitian map.

    Each sweep applies ``matvec`` and ``precond`` once to every still-active
    search direction and performs Rayleigh-Ritz on span[X, W, P].  Returns
    ``(values, vectors, residual_norms, converged, iterations, history)``.
    """
    X = _orthonormalize(X0.astype(complex))
    b = X.shape[1]
    if b < m:
        raise ValueError("initial block is rank deficient")
    AX = matvec(X)
    theta, C = _rayleigh_ritz(X, AX)
    X, AX = X @ C, AX @ C
    P = AP = None
    history = [float(theta[0])]
    it = 0
    converged = np.zeros(b, dtype=bool)
    res = np.full(b, np.inf)
    for it in range(1, max_iterations + 1):
        R = AX - X * theta
        res = np.linalg.norm(R, axis=0)
        converged = res <= tol
        if np.all(converged[:m]):
            break
        active = ~converged
        active[m:] = True  # guard vectors keep moving while any wanted pair is unconverged
        W = precond(R[:, active])
        W = _project_out(W, X, P)
        W = _orthonormalize(_project_out(_orthonormalize(W), X, P))
        if W.shape[1] == 0:
            log.warning("search directions collapsed at iteration %d", it)
            break
        AW = matvec(W)
        blocks = [X, W] + ([P] if P is not None else [])
        ablocks = [AX, AW] + ([AP] if AP is not None else [])
        S = np.hstack(blocks)
        AS = np.hstack(ablocks)
        vals, Cs = _rayleigh_ritz(S, AS)
        Cx = Cs[:, :b]
        theta = vals[:b]
        # new conjugate directions: the non-X part of the active Ritz vectors,
        # made orthonormal and orthogonal to the new X in coefficient space
        Cp = Cx[:, active].copy()
        Cp[:b, :] = 0.0
        Cp = Cp - Cx @ (Cx.conj().T @ Cp)
        Cp = _orthonormalize(Cp)
        X, AX = S @ Cx, AS @ Cx
        if Cp.shape[1]:
            P, AP = S @ Cp, AS @ Cp
        else:
            P = AP = None
        if it % 25 == 0:
            # refresh against drift in the recurrences for X and AX
            X = _orthonormalize(X)
            AX = matvec(X)
            theta, C = _rayleigh_ritz(X, AX)
            X, AX = X @ C, AX @ C
            if P is not None:
                P = _orthonormalize(_project_out(P, X))
                AP = matvec(P) if P.shape[1] else None
                if not P.shape[1]:
                    P = None
        if debug and theta[0] > history[-1] + 1e-10 * max(1.0, abs(history[-1])):
            raise AssertionError(f"smallest Ritz value increased at iteration {it}")
        history.append(float(theta[0]))
    return theta[:m], X[:, :m], res[:m], converged[:m], it, history


def solve_iterative(op: SpectralOperator, M: DiagonalPreconditioner, opts: SolveOptions) -> EigenResult:
    t0 = time.perf_counter()
    D = op.size
    b = min(opts.block, D)
    m = min(opts.m, b)
    rng = np.random.default_rng(opts.seed)
    X0 = rng.standard_normal((D, b)) + 1j * rng.standard_normal((D, b))
    tol = effective_tolerance(op, M, opts.tol)
    if tol > opts.tol:
        log.info("residual tolerance raised from %.1e to attainable %.1e", opts.tol, tol)
    theta, V, _, _, its, hist = lobpcg(op.matvec, X0, M, m, tol, opts.max_iterations, debug=opts.debug)
    V = _normalize_columns(V, op, "l2")
    theta = op.energy(V)
    order = np.argsort(theta, kind="stable")
    theta, V = theta[order], V[:, order]
    res = _residuals(op, V, theta)
    conv = res <= tol
    if not np.all(conv):
        log.warning("%d of %d pairs unconverged after %d iterations", int((~conv).sum()), m, its)
    if opts.normalization != "l2":
        V = _normalize_columns(V, op, opts.normalization)
    return EigenResult(
        eigenvalues=np.asarray(theta),
        vectors=V,
        index_set=op.index_set,
        residual_norms=res,
        iterations=its,
        converged=conv,
        normalization=opts.normalization,
        tolerance=tol,
        wall_time=time.perf_counter() - t0,
        ritz_history=hist,
    )


def solve(op: SpectralOperator, opts: SolveOptions, M: DiagonalPreconditioner | None = None) -> EigenResult:
    if opts.mode == "dense":
        return solve_dense(op, opts)
    return solve_iterative(op, M if M is not None else build_preconditioner(op), opts)


def condition_numbers(
    op: SpectralOperator, M: DiagonalPreconditioner, max_modes: int = DENSE_MAX_MODES
) -> tuple[float, float]:
    """2-norm condition numbers of ``Q`` and ``M Q``."""
    if op.matrix is None:
        raise ValueError("condition numbers need a dense operator")
    if op.size > max_modes:
        raise DenseSizeError(f"{op.size} modes exceed the dense limit {max_modes}")
    s = scipy.linalg.svdvals(op.matrix)
    sm = scipy.linalg.svdvals(M.entries[:, None] * op.matrix)
    return float(s[0] / s[-1]), float(sm[0] / sm[-1])
