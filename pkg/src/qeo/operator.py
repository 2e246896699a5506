"""Discrete form of ``-div(alpha grad u) + u`` lifted to the torus.

With pseudospectral coefficients ``a_k`` of the parent ``A`` on ``K_N^n`` and
physical frequencies ``p_k = P k``, the discrete operator is

    Q[i, j] = a[(k_i - k_j) mod N] * (p_i . p_j) + delta_ij

i.e. the Hadamard product of the coefficient convolution matrix with the
frequency Gram matrix, shifted by the identity.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .lattice import FrequencyIndexSet, ProjectionMatrix, build_index_set, frequency
from .qpfield import CoefficientField, GridSamples, TrigField, forward_dft, sample_on_grid

log = logging.getLogger(__name__)

DENSE_MAX_MODES = 2**14
# Coefficient modes below this fraction of the largest are treated as zero
# by the support-sum row-norm route.
SUPPORT_CUTOFF = 1e-14
SUPPORT_MAX_TERMS = 64


class DenseSizeError(ValueError):
    """Raised when a dense matrix would exceed the configured mode budget."""


class SpectralOperator:
    """The shifted operator on ``K_N^n``, dense or matrix-free.

    Instances are treated as immutable once built; ``apply`` allocates its
    FFT work arrays per call, so concurrent calls are safe.
    """

    def __init__(self, coeff: TrigField, P: ProjectionMatrix, N: int, mode: str = "matrix-free"):
        if coeff.n != P.n:
            raise ValueError(f"coefficient lives on n={coeff.n} but P has n={P.n}")
        if mode not in ("dense", "matrix-free"):
            raise ValueError(f"unknown mode {mode!r}")
        self.coeff = coeff
        self.P = P
        self.index_set: FrequencyIndexSet = build_index_set(N, P.n)
        self.mode = mode
        self.matrix: np.ndarray | None = None

        # p_k for every k in linearized order, and the same in FFT layout per direction
        self.freqs = frequency(P, self.index_set.indices)  # (N^n, d)
        shape = self.index_set.shape
        self._freqs_fft = [np.fft.ifftshift(self.freqs[:, l].reshape(shape)) for l in range(P.d)]
        samples = sample_on_grid(coeff, N).as_array()
        if coeff.is_real():
            samples = samples.real
        self.coeff_samples = samples
        # pseudospectral coefficients, i.e. interpolate(coeff, N) from the samples above
        self.coeff_spectrum: CoefficientField = forward_dft(GridSamples(N, P.n, samples))

    @property
    def N(self) -> int:
        return self.index_set.N

    @property
    def size(self) -> int:
        return len(self.index_set)

    @property
    def is_hermitian_coefficient(self) -> bool:
        return self.coeff.is_real()

    def matvec(self, X: np.ndarray) -> np.ndarray:
        """Matrix-free product on raw arrays of shape ``(D,)`` or ``(D, m)``."""
        X = np.asarray(X)
        single = X.ndim == 1
        if single:
            X = X[:, None]
        if X.shape[0] != self.size:
            raise ValueError(f"vector length {X.shape[0]} does not match operator size {self.size}")
        shape = self.index_set.shape
        m = X.shape[1]
        axes = tuple(range(self.P.n))
        Xf = np.fft.ifftshift(X.reshape(shape + (m,)), axes=axes)
        out = Xf.astype(complex, copy=True)
        scale = self.size
        A = self.coeff_samples[..., None]
        for pl in self._freqs_fft:
            pl = pl[..., None]
            g = np.fft.ifftn(pl * Xf, axes=axes) * scale
            h = np.fft.fftn(A * g, axes=axes) / scale
            out += pl * h
        out = np.fft.fftshift(out, axes=axes).reshape(self.size, m)
        return out[:, 0] if single else out

    def energy(self, X: np.ndarray) -> np.ndarray:
        """Column-wise ``a_p(u, u)`` evaluated on the grid.

        Equals ``u^H Q u`` but avoids multiplying transform roundoff by the
        large outer frequency factor, so it is the accurate way to get Ritz
        values of well-resolved vectors.
        """
        X = np.asarray(X)
        single = X.ndim == 1
        if single:
            X = X[:, None]
        shape = self.index_set.shape
        axes = tuple(range(self.P.n))
        Xf = np.fft.ifftshift(X.reshape(shape + (X.shape[1],)), axes=axes)
        A = self.coeff_samples[..., None]
        total = np.sum(np.abs(X) ** 2, axis=0)
        for pl in self._freqs_fft:
            g = np.fft.ifftn(pl[..., None] * Xf, axes=axes)
            # (1/D) sum_j A |g_unit|^2 with g_unit = D * ifftn(...)
            total = total + self.size * np.sum((A * np.abs(g) ** 2).reshape(-1, X.shape[1]), axis=0).real
        return total[0] if single else total


def assemble_dense(A: TrigField, P: ProjectionMatrix, N: int, max_modes: int = DENSE_MAX_MODES) -> SpectralOperator:
    op = SpectralOperator(A, P, N, mode="dense")
    D = op.size
    if D > max_modes:
        raise DenseSizeError(
            f"dense assembly needs {D} modes > limit {max_modes}; use the matrix-free operator instead"
        )
    iset = op.index_set
    ks = iset.indices
    h = N // 2
    # flat index of (k_i - k_j) mod N in the centered coefficient array
    flat = np.zeros((D, D), dtype=np.int64)
    for j in range(P.n):
        diff = (ks[:, None, j] - ks[None, :, j] + h) % N
        flat = flat * N + diff
    amat = op.coeff_spectrum.coeffs[flat]
    del flat
    W = op.freqs @ op.freqs.T
    Q = amat * W
    Q[np.diag_indices(D)] += 1.0
    op.matrix = Q
    return op


def matrix_free(A: TrigField, P: ProjectionMatrix, N: int) -> SpectralOperator:
    return SpectralOperator(A, P, N, mode="matrix-free")


def apply(op: SpectralOperator, u: CoefficientField) -> CoefficientField:
    if u.index_set != op.index_set:
        raise ValueError(
            f"field lives on K_{u.index_set.N}^{u.index_set.n}, operator on K_{op.N}^{op.index_set.n}"
        )
    return CoefficientField(op.index_set, op.matvec(u.coeffs))


def diagonal(op: SpectralOperator) -> np.ndarray:
    a0 = op.coeff_spectrum[(0,) * op.index_set.n].real
    return a0 * np.sum(op.freqs**2, axis=1) + 1.0


def row_norms_squared(op: SpectralOperator, method: str = "auto") -> np.ndarray:
    """``sum_j |Q_ij|^2`` for every row.

    ``method`` is ``dense`` (needs an assembled matrix), ``support`` (exact
    sum over the nonzero coefficient modes), ``fft`` (circular convolutions)
    or ``auto``.
    """
    if method == "auto":
        if op.matrix is not None:
            method = "dense"
        elif _coefficient_support(op)[0].shape[0] <= SUPPORT_MAX_TERMS:
            method = "support"
        else:
            method = "fft"
    if method == "dense":
        if op.matrix is None:
            raise ValueError("operator has no dense matrix")
        return np.sum(np.abs(op.matrix) ** 2, axis=1)
    if method == "support":
        return _row_norms_support(op)
    if method == "fft":
        return _row_norms_fft(op)
    raise ValueError(f"unknown method {method!r}")


def _diag_terms(op: SpectralOperator) -> np.ndarray:
    a0 = op.coeff_spectrum[(0,) * op.index_set.n].real
    return 2.0 * a0 * np.sum(op.freqs**2, axis=1) + 1.0


def _coefficient_support(op: SpectralOperator) -> tuple[np.ndarray, np.ndarray]:
    c = op.coeff_spectrum.coeffs
    mag = np.abs(c)
    keep = mag > SUPPORT_CUTOFF * max(mag.max(), 1e-300)
    return op.index_set.indices[keep], c[keep]


def _row_norms_support(op: SpectralOperator) -> np.ndarray:
    # |Q_ij|^2 = |a_{ki-kj}|^2 (p_i.p_j)^2 + delta_ij (2 Re(a_0)|p_i|^2 + 1)
    iset = op.index_set
    ks = iset.indices
    N = iset.N
    h = N // 2
    out = np.zeros(op.size)
    for m, am in zip(*_coefficient_support(op)):
        partner = (ks - m + h) % N - h  # k_j with k_i - k_j = m (mod N)
        j = iset.linearize_array(partner)
        dots = np.einsum("il,il->i", op.freqs, op.freqs[j])
        out += abs(am) ** 2 * dots**2
    return out + _diag_terms(op)


def _row_norms_fft(op: SpectralOperator) -> np.ndarray:
    # sum_j |a_{ki-kj}|^2 (p_i.p_j)^2 = sum_{l,m} p_il p_im [ |a|^2 (*) (p_l p_m) ](k_i)
    shape = op.index_set.shape
    B = np.fft.fftn(np.abs(op.coeff_spectrum.fft_order()) ** 2)
    p = op._freqs_fft
    d = op.P.d
    acc = np.zeros(shape)
    for l in range(d):
        for m in range(l, d):
            conv = np.fft.ifftn(B * np.fft.fftn(p[l] * p[m])).real
            acc += (1.0 if l == m else 2.0) * p[l] * p[m] * conv
    return np.fft.fftshift(acc).ravel() + _diag_terms(op)


def export_matrix_market(op: SpectralOperator, path: str | Path) -> Path:
    """Write the dense matrix as a complex general coordinate file."""
    import scipy.io
    import scipy.sparse

    if op.matrix is None:
        raise ValueError("operator has no dense matrix")
    path = Path(path)
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(op.matrix), field="complex", symmetry="general")
    return path
