"""Parent periodic fields and their quasiperiodic traces.

Parent fields are finite trigonometric polynomials on the torus, stored as
a map from integer multi-index to complex coefficient.  Grid data lives on
``y_j = 2*pi*j/N``; coefficient data on ``K_N^n`` in the linearized order of
:mod:`qeo.lattice`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .lattice import FrequencyIndexSet, MultiIndex, ProjectionMatrix, build_index_set, frequency

REAL_TOL = 1e-12


@dataclass(frozen=True)
class TrigField:
    """Finite sum ``sum_k c_k exp(i k.y)`` on the ``n``-torus."""

    n: int
    terms: Mapping[MultiIndex, complex]

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("torus dimension must be positive")
        clean: dict[MultiIndex, complex] = {}
        for k, c in self.terms.items():
            k = tuple(int(v) for v in k)
            if len(k) != self.n:
                raise ValueError(f"multi-index {k} does not have length {self.n}")
            c = complex(c)
            total = clean.get(k, 0j) + c
            clean[k] = total
        clean = {k: c for k, c in sorted(clean.items()) if c != 0}
        object.__setattr__(self, "terms", clean)

    @classmethod
    def constant(cls, value: complex, n: int) -> "TrigField":
        return cls(n, {(0,) * n: value})

    @classmethod
    def cosine_sum(cls, n: int, amplitude: float = 1.0, offset: float = 0.0) -> "TrigField":
        """``amplitude * sum_j cos(y_j) + offset``."""
        terms: dict[MultiIndex, complex] = {(0,) * n: offset}
        for j in range(n):
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = amplitude / 2
            e[j] = -1
            terms[tuple(e)] = amplitude / 2
        return cls(n, terms)

    @classmethod
    def from_records(cls, records: Iterable[Mapping], n: int | None = None) -> "TrigField":
        """Parse ``[{"k": [...], "re": .., "im": ..}, ...]``."""
        records = list(records)
        if n is None:
            if not records:
                raise ValueError("cannot infer torus dimension from an empty term list")
            n = len(records[0]["k"])
        terms: dict[MultiIndex, complex] = {}
        for rec in records:
            k = tuple(int(v) for v in rec["k"])
            terms[k] = terms.get(k, 0j) + complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        return cls(n, terms)

    def to_records(self) -> list[dict]:
        return [{"k": list(k), "re": c.real, "im": c.imag} for k, c in self.terms.items()]

    def is_real(self, tol: float = REAL_TOL) -> bool:
        """True when ``c_{-k} = conj(c_k)`` for every stored ``k``."""
        for k, c in self.terms.items():
            mk = tuple(-v for v in k)
            if abs(self.terms.get(mk, 0j) - c.conjugate()) > tol * max(1.0, abs(c)):
                return False
        return True

    def max_degree(self) -> int:
        return max((max(abs(v) for v in k) for k in self.terms), default=0)

    def __add__(self, other: "TrigField") -> "TrigField":
        self._check_same_dim(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0j) + c
        return TrigField(self.n, terms)

    def __sub__(self, other: "TrigField") -> "TrigField":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "TrigField":
        return TrigField(self.n, {k: factor * c for k, c in self.terms.items()})

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Evaluate the parent at torus points ``y`` of shape ``(..., n)``."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.n:
            raise ValueError(f"points have dimension {y.shape[-1]}, expected {self.n}")
        out = np.zeros(y.shape[:-1], dtype=complex)
        for k, c in self.terms.items():
            out += c * np.exp(1j * (y @ np.asarray(k, dtype=float)))
        return out

    def _check_same_dim(self, other: "TrigField"):
        if other.n != self.n:
            raise ValueError(f"torus dimensions differ: {self.n} vs {other.n}")


@dataclass(frozen=True)
class GridSamples:
    """``N**n`` samples at ``y_j = 2*pi*j/N`` in C order of ``j``."""

    N: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size != self.N**self.n:
            raise ValueError(f"expected {self.N ** self.n} samples, got {v.size}")
        object.__setattr__(self, "values", v)

    def as_array(self) -> np.ndarray:
        return self.values.reshape((self.N,) * self.n)


@dataclass(frozen=True)
class CoefficientField:
    """Discrete Fourier coefficients on ``K_N^n`` in linearized order."""

    index_set: FrequencyIndexSet
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.size != len(self.index_set):
            raise ValueError(f"expected {len(self.index_set)} coefficients, got {c.size}")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.index_set.N

    @property
    def n(self) -> int:
        return self.index_set.n

    def as_array(self) -> np.ndarray:
        """Centered ``(N,)*n`` array; entry ``[k + N//2]`` holds coefficient ``k``."""
        return self.coeffs.reshape(self.index_set.shape)

    def fft_order(self) -> np.ndarray:
        return np.fft.ifftshift(self.as_array())

    @classmethod
    def from_fft_order(cls, index_set: FrequencyIndexSet, arr: np.ndarray) -> "CoefficientField":
        return cls(index_set, np.fft.fftshift(arr).ravel())

    @classmethod
    def zeros(cls, index_set: FrequencyIndexSet) -> "CoefficientField":
        return cls(index_set, np.zeros(len(index_set), dtype=complex))

    def __getitem__(self, k) -> complex:
        from .lattice import linearize

        return complex(self.coeffs[linearize(tuple(k), self.index_set)])

    def to_trig_field(self) -> TrigField:
        nz = np.nonzero(self.coeffs)[0]
        return TrigField(self.n, {tuple(int(v) for v in self.index_set.indices[i]): self.coeffs[i] for i in nz})


FieldLike = Union[TrigField, CoefficientField]


def _grid_axis(N: int) -> np.ndarray:
    return 2 * np.pi * np.arange(N) / N


def sample_on_grid(F: TrigField, N: int) -> GridSamples:
    """Exact evaluation of ``F`` at every grid point.

    Each term factorizes over dimensions, so it is built as an outer product
    of 1-D exponentials instead of evaluating ``n``-D phases point by point.
    """
    y = _grid_axis(N)
    out = np.zeros((N,) * F.n, dtype=complex)
    for k, c in F.terms.items():
        term = np.array(c, dtype=complex)
        for kj in k:
            term = np.multiply.outer(term, np.exp(1j * kj * y))
        out += term
    return GridSamples(N, F.n, out)


def forward_dft(g: GridSamples) -> CoefficientField:
    iset = build_index_set(g.N, g.n)
    c = np.fft.fftn(g.as_array()) / g.N**g.n
    return CoefficientField.from_fft_order(iset, c)


def inverse_dft(c: CoefficientField) -> GridSamples:
    vals = np.fft.ifftn(c.fft_order()) * c.N**c.n
    return GridSamples(c.N, c.n, vals)


def mean_value(F: TrigField) -> complex:
    """The zero-frequency coefficient, i.e. the mean of every trace of ``F``."""
    return complex(F.terms.get((0,) * F.n, 0j))


def qp_evaluate(F: TrigField, P: ProjectionMatrix, x: np.ndarray) -> np.ndarray:
    """Evaluate the quasiperiodic trace ``sum_k c_k exp(i (P k).x)``.

    ``x`` has shape ``(d,)`` or ``(m, d)``.  This sums over physical
    frequencies; ``F.evaluate(x @ P.entries)`` is the parent-composition path.
    """
    if P.n != F.n:
        raise ValueError(f"projection has n={P.n} but field has n={F.n}")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != P.d:
        raise ValueError(f"points have dimension {x.shape[-1]}, expected d={P.d}")
    if not F.terms:
        return np.zeros(x.shape[:-1], dtype=complex)
    ks = np.array(list(F.terms.keys()), dtype=float)
    cs = np.array(list(F.terms.values()), dtype=complex)
    lam = frequency(P, ks)  # (terms, d)
    return np.exp(1j * (x @ lam.T)) @ cs


def _trapezoid_mean_exp(omega: float, T: float, samples: int) -> complex:
    x = np.linspace(-T, T, samples)
    v = np.exp(1j * omega * x)
    return complex(np.trapezoid(v, x) / (2 * T))


def line_mean_estimate(F: TrigField, P: ProjectionMatrix, T: float, samples: int) -> complex:
    """Trapezoidal box average of the trace over ``[-T, T]^d``.

    The tensor-product rule applied to ``exp(i lam.x)`` factorizes into a
    product of 1-D rules, which is what gets evaluated here.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if samples < 2:
        raise ValueError("need at least two samples per axis")
    total = 0j
    cache: dict[float, complex] = {}
    for k, c in F.terms.items():
        lam = frequency(P, k)
        prod = 1.0 + 0j
        for w in lam:
            w = float(w)
            if w not in cache:
                cache[w] = _trapezoid_mean_exp(w, T, samples)
            prod *= cache[w]
        total += c * prod
    return total


def truncate(F: FieldLike, N: int) -> CoefficientField:
    """Keep exactly the modes of ``F`` inside ``K_N^n``."""
    iset = build_index_set(N, F.n)
    out = np.zeros(len(iset), dtype=complex)
    if isinstance(F, TrigField):
        items = [(k, c) for k, c in F.terms.items() if k in iset]
        if items:
            ks = np.array([k for k, _ in items])
            out[iset.linearize_array(ks)] = [c for _, c in items]
    else:
        ks = F.index_set.indices
        mask = iset.contains_array(ks)
        out[iset.linearize_array(ks[mask])] = F.coeffs[mask]
    return CoefficientField(iset, out)


def interpolate(F: TrigField, N: int) -> CoefficientField:
    return forward_dft(sample_on_grid(F, N))


def _field_frequencies(c: FieldLike, P: ProjectionMatrix) -> tuple[np.ndarray, np.ndarray]:
    if P.n != c.n:
        raise ValueError(f"projection has n={P.n} but field has n={c.n}")
    if isinstance(c, TrigField):
        if not c.terms:
            return np.zeros((0, P.d)), np.zeros(0, dtype=complex)
        ks = np.array(list(c.terms.keys()))
        vals = np.array(list(c.terms.values()), dtype=complex)
    else:
        ks, vals = c.index_set.indices, c.coeffs
    return frequency(P, ks), vals


def sobolev_norm(c: FieldLike, P: ProjectionMatrix, s: float, seminorm: bool = False) -> float:
    """``(sum_k w_k |c_k|^2)^(1/2)`` with ``w_k = (1 + |Pk|^2)^s``.

    With ``seminorm=True`` the weight is ``|Pk|^(2s)`` instead.
    """
    lam, vals = _field_frequencies(c, P)
    mag2 = np.sum(lam**2, axis=-1)
    if seminorm:
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(mag2 > 0, mag2**s, 0.0 if s > 0 else (1.0 if s == 0 else np.inf))
    else:
        w = (1.0 + mag2) ** s
    return float(np.sqrt(np.sum(w * np.abs(vals) ** 2)))
