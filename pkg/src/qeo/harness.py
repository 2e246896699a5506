"""Experiment engine: built-in examples, convergence studies with eigenpair
tracking, condition reports, PM-vs-PAM comparison and file output.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .eigensolver import (
    EigenResult,
    SolveOptions,
    build_preconditioner,
    condition_numbers,
    solve_dense,
    solve_iterative,
)
from .lattice import ProjectionMatrix, build_index_set
from .operator import DENSE_MAX_MODES, SpectralOperator, assemble_dense, diagonal, matrix_free
from .pam import diophantine_error, pam_problem, pam_solve, pm_to_pam_modes
from .qpfield import CoefficientField, TrigField, qp_evaluate

log = logging.getLogger(__name__)

# below this many modes a convergence study uses the dense solver
DENSE_STUDY_LIMIT = 2048
AMBIGUOUS_OVERLAP = 0.5
TRIVIAL_TOL = 1e-8


@dataclass
class ExperimentConfig:
    """Everything needed to rerun a study; JSON keys equal the field names."""

    name: str
    d: int
    n: int
    P: list[float]
    coefficient: list[dict]
    N_list: list[int]
    reference_N: int
    pairs: int = 2
    solver: dict = field(default_factory=dict)
    normalization: str = "l2"
    output_dir: str = "out"
    # the constant mode is an exact eigenvector (gamma = 1) whenever the
    # coefficient is real; it carries no discretization error and is skipped
    skip_trivial: bool = True
    # eigenpairs computed per solve; None picks a window from the diagonal
    search_pairs: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.N_list:
            raise ValueError("N_list is empty")
        if any(N < 2 for N in self.N_list):
            raise ValueError("every N must be at least 2")
        if self.reference_N < max(self.N_list):
            raise ValueError("reference_N must be at least max(N_list)")
        if self.pairs < 1:
            raise ValueError("pairs must be positive")
        if self.normalization not in ("l2", "h1p"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if len(self.P) != self.d * self.n:
            raise ValueError(f"P needs {self.d * self.n} entries, got {len(self.P)}")
        if not self.field().is_real():
            raise ValueError("coefficient must be real-valued")

    def projection(self) -> ProjectionMatrix:
        return ProjectionMatrix.from_rows(self.d, self.n, self.P)

    def field(self) -> TrigField:
        return TrigField.from_records(self.coefficient, self.n)

    def options(self, m: int, mode: str | None = None, reference: bool = False) -> SolveOptions:
        """Solver options; ``solver["reference_tol"]``, if set, replaces ``tol`` for the reference solve."""
        s = dict(self.solver)
        ref_tol = s.pop("reference_tol", None)
        if reference and ref_tol is not None:
            s["tol"] = ref_tol
        if mode is not None:
            s["mode"] = mode
        s["m"] = m
        s["normalization"] = "l2"
        return SolveOptions(**s)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        required = {f.name for f in dataclasses.fields(cls) if f.default is dataclasses.MISSING
                    and f.default_factory is dataclasses.MISSING}
        missing = required - set(data)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path


def builtin_example(id: int, beta: float = 0.5 * math.pi, theta: float = 0.2 * math.pi) -> ExperimentConfig:
    """Configs for the three model problems.

    1. ``A = (cos y1 + cos y2)/2 + 1`` with ``P = 2 pi (1, (sqrt5-1)/2)``.
    2. ``A = cos y1 + cos y2 + cos y3 + 6`` with ``P = beta [[1, 0, cos t], [0, 1, sin t]]``.
    3. ``A = cos y1 + ... + cos y4 + 8`` with ``P = 2 pi diag-like [[1,0,0,0],[0,1,0,0],[0,0,1,sqrt5-1]]``.
    """
    g = math.sqrt(5.0) - 1.0
    if id == 1:
        P = 2 * np.pi * np.array([[1.0, g / 2]])
        A = TrigField.cosine_sum(2, amplitude=0.5, offset=1.0)
        return ExperimentConfig(
            "example1", 1, 2, P.ravel().tolist(), A.to_records(), [8, 16, 32], 128, pairs=2,
            solver={"tol": 1e-10},
        )
    if id == 2:
        P = beta * np.array([[1.0, 0.0, math.cos(theta)], [0.0, 1.0, math.sin(theta)]])
        A = TrigField.cosine_sum(3, amplitude=1.0, offset=6.0)
        return ExperimentConfig(
            "example2", 2, 3, P.ravel().tolist(), A.to_records(), [4, 8, 16], 32, pairs=2,
            solver={"tol": 1e-10},
        )
    if id == 3:
        P = 2 * np.pi * np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, g]])
        A = TrigField.cosine_sum(4, amplitude=1.0, offset=8.0)
        return ExperimentConfig(
            "example3", 3, 4, P.ravel().tolist(), A.to_records(), [6, 8, 10, 12, 14], 16, pairs=3,
            solver={"tol": 1e-10, "reference_tol": 1e-12}, search_pairs=24,
        )
    raise ValueError(f"unknown example id {id!r}; expected 1, 2 or 3")


# ---------------------------------------------------------------------------
# comparing solutions across N


def embed_coefficients(u: CoefficientField, N2: int) -> CoefficientField:
    """Zero-pad ``u`` from ``K_N1^n`` into ``K_N2^n``, keeping every mode ``k``."""
    N1 = u.N
    if N2 < N1:
        raise ValueError(f"cannot embed N={N1} into smaller N={N2}")
    return CoefficientField(build_index_set(N2, u.n), _embed_array(u.coeffs, N1, N2, u.n))


def _embed_array(V: np.ndarray, N1: int, N2: int, n: int) -> np.ndarray:
    """Column-wise zero padding of raw coefficient vectors (``V`` is ``(N1^n,)`` or ``(N1^n, m)``)."""
    if N1 == N2:
        return V.copy()
    cols = V.shape[1:] if V.ndim == 2 else ()
    src = V.reshape((N1,) * n + cols)
    out = np.zeros((N2,) * n + cols, dtype=complex)
    # centered layout: mode k sits at k + N//2 in each direction
    o = N2 // 2 - N1 // 2
    out[tuple(slice(o, o + N1) for _ in range(n))] = src
    return out.reshape((N2**n,) + cols)


def _l2_columns(res: EigenResult) -> np.ndarray:
    V = res.vectors
    return V / np.linalg.norm(V, axis=0)


def overlap_matrix(reference: EigenResult, current: EigenResult) -> np.ndarray:
    """``|<u_ref_i, u_cur_j>|`` after embedding both into the larger lattice."""
    n = reference.index_set.n
    if current.index_set.n != n:
        raise ValueError("results live on tori of different dimension")
    Nmax = max(reference.N, current.N)
    R = _embed_array(_l2_columns(reference), reference.N, Nmax, n)
    C = _embed_array(_l2_columns(current), current.N, Nmax, n)
    return np.abs(R.conj().T @ C)


@dataclass
class Matching:
    """``indices[s]`` is the column of the current result matched to reference state ``s``."""

    indices: dict[int, int]
    overlaps: dict[int, float]
    ambiguous: list[int]


def track_eigenpairs(
    reference: EigenResult, current: EigenResult, states: Sequence[int] | None = None
) -> Matching:
    """Greedy maximum-overlap assignment, largest overlaps first."""
    states = list(range(reference.m)) if states is None else list(states)
    O = overlap_matrix(reference, current)[states]
    order = np.dstack(np.unravel_index(np.argsort(-O, axis=None, kind="stable"), O.shape))[0]
    indices: dict[int, int] = {}
    overlaps: dict[int, float] = {}
    used: set[int] = set()
    for r, c in order:
        s = states[r]
        if s in indices or c in used:
            continue
        indices[s] = int(c)
        overlaps[s] = float(O[r, c])
        used.add(int(c))
        if len(indices) == len(states):
            break
    ambiguous = [s for s in states if overlaps.get(s, 0.0) < AMBIGUOUS_OVERLAP]
    return Matching(indices, overlaps, ambiguous)


def eigenfunction_error(u_ref: CoefficientField, u_N: CoefficientField) -> float:
    """Phase-aligned L2 distance ``min_phi ||e^{i phi} u_N - u_ref||``.

    Both fields must be unit vectors; the coarser one is embedded first.
    The minimum is ``sqrt(2 - 2 |<u_ref, u_N>|)``.
    """
    if not np.any(u_ref.coeffs) or not np.any(u_N.coeffs):
        raise ValueError("eigenfunction error of a zero vector")
    N = max(u_ref.N, u_N.N)
    a = embed_coefficients(u_ref, N).coeffs
    b = embed_coefficients(u_N, N).coeffs
    ip = min(abs(np.vdot(a, b)), 1.0)
    return float(math.sqrt(max(2.0 - 2.0 * ip, 0.0)))


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceRecord:
    N: int
    state: int
    eigenvalue: float
    reference_eigenvalue: float
    eigenvalue_error: float
    eigenfunction_error: float
    # eigenvalue of the operator without the identity shift
    gamma_minus_one: float
    overlap: float
    residual: float
    converged: bool
    ambiguous: bool
    wall_time: float


RECORD_FIELDS = [f.name for f in dataclasses.fields(ConvergenceRecord)]


def _is_trivial(res: EigenResult, j: int) -> bool:
    # the constant mode: gamma = 1 and all weight on k = 0
    zero = _zero_index(res)
    v = res.vectors[:, j]
    return abs(res.eigenvalues[j] - 1.0) < TRIVIAL_TOL and abs(v[zero]) > (1 - 1e-6) * np.linalg.norm(v)


def _zero_index(res: EigenResult) -> int:
    from .lattice import linearize

    return linearize((0,) * res.index_set.n, res.index_set)


def nontrivial_states(res: EigenResult, count: int, skip_trivial: bool = True) -> list[int]:
    out = [j for j in range(res.m) if not (skip_trivial and _is_trivial(res, j))]
    if len(out) < count:
        raise ValueError(f"only {len(out)} usable states among {res.m} computed")
    return out[:count]


def _operator(cfg: ExperimentConfig, N: int, dense: bool) -> SpectralOperator:
    A, P = cfg.field(), cfg.projection()
    return assemble_dense(A, P, N) if dense else matrix_free(A, P, N)


def solve_at(cfg: ExperimentConfig, N: int, m: int, reference: bool = False) -> EigenResult:
    """One solve at grid size ``N``; the mode follows the config or the problem size."""
    mode = cfg.solver.get("mode")
    D = N**cfg.n
    dense = mode == "dense" if mode else D <= DENSE_STUDY_LIMIT
    op = _operator(cfg, N, dense)
    m = min(m, D)
    if dense:
        return solve_dense(op, cfg.options(m, "dense", reference))
    return solve_iterative(op, build_preconditioner(op), cfg.options(m, "iterative", reference))


def search_window(cfg: ExperimentConfig, N: int, target: float, extra: int = 4) -> int:
    """Pairs to request so states up to ``target`` are inside the computed window.

    Counts diagonal entries below ``1 + 2 (target - 1)``; the diagonal tracks
    where plane-wave-like states with small physical frequency sit.
    """
    if cfg.search_pairs is not None:
        return cfg.search_pairs
    op = matrix_free(cfg.field(), cfg.projection(), N)
    below = int(np.count_nonzero(diagonal(op) <= 1.0 + 2.0 * (target - 1.0)))
    return min(max(below, cfg.pairs + 1) + cfg.pairs + extra, N**cfg.n)


def _track_with_widening(
    cfg: ExperimentConfig, N: int, ref: EigenResult, states: list[int], m: int, max_doublings: int = 2,
    reference: bool = False,
) -> tuple[EigenResult, Matching]:
    for attempt in range(max_doublings + 1):
        res = solve_at(cfg, N, m, reference)
        match = track_eigenpairs(ref, res, states)
        if not match.ambiguous or m >= N**cfg.n:
            break
        if attempt < max_doublings:
            log.info("N=%d: ambiguous states %s with %d pairs, widening", N, match.ambiguous, m)
            m = min(2 * m, N**cfg.n)
    return res, match


@dataclass
class StudyResult:
    records: list[ConvergenceRecord]
    reference: EigenResult
    reference_states: list[int]
    coarse: EigenResult
    coarse_states: list[int]
    results: dict[int, EigenResult] = field(default_factory=dict, repr=False)


def run_convergence_study(cfg: ExperimentConfig, keep_results: bool = False) -> StudyResult:
    """Pick states on the coarsest grid, follow them to the reference, then measure every N."""
    Ns = sorted(cfg.N_list)
    N0 = Ns[0]
    extra = 1 if cfg.skip_trivial else 0
    coarse = solve_at(cfg, N0, min(cfg.pairs + extra + 4, N0**cfg.n))
    coarse_states = nontrivial_states(coarse, cfg.pairs, cfg.skip_trivial)
    target = float(np.max(coarse.eigenvalues[coarse_states]))

    Nref = cfg.reference_N
    ref, m_ref = _track_with_widening(
        cfg, Nref, coarse, coarse_states, search_window(cfg, Nref, target), reference=True
    )
    ref_states = [m_ref.indices[s] for s in coarse_states]
    if m_ref.ambiguous:
        log.warning("reference tracking ambiguous for coarse states %s", m_ref.ambiguous)
    log.info("reference N=%d states %s eigenvalues %s", Nref, ref_states, ref.eigenvalues[ref_states])

    records: list[ConvergenceRecord] = []
    results: dict[int, EigenResult] = {Nref: ref}
    ref_vecs = ref.eigenvectors
    for N in Ns:
        if N == N0:
            res = coarse
            match = track_eigenpairs(ref, res, ref_states)
        else:
            target_N = float(np.max(ref.eigenvalues[ref_states]))
            res, match = _track_with_widening(cfg, N, ref, ref_states, search_window(cfg, N, target_N))
        if keep_results:
            results[N] = res
        vecs = res.eigenvectors
        for s, rs in enumerate(ref_states):
            j = match.indices[rs]
            g = float(res.eigenvalues[j])
            gr = float(ref.eigenvalues[rs])
            records.append(
                ConvergenceRecord(
                    N=N,
                    state=s + 1,
                    eigenvalue=g,
                    reference_eigenvalue=gr,
                    eigenvalue_error=abs(gr - g),
                    eigenfunction_error=eigenfunction_error(ref_vecs[rs], vecs[j]),
                    gamma_minus_one=g - 1.0,
                    overlap=match.overlaps[rs],
                    residual=float(res.residual_norms[j]),
                    converged=bool(res.converged[j]),
                    ambiguous=rs in match.ambiguous,
                    wall_time=res.wall_time,
                )
            )
    return StudyResult(records, ref, ref_states, coarse, coarse_states, results)


# ---------------------------------------------------------------------------
# condition numbers


@dataclass
class ConditionRow:
    N: int
    cond_Q: float
    cond_MQ: float


def run_condition_report(cfg: ExperimentConfig, N_list: Iterable[int], max_modes: int = DENSE_MAX_MODES) -> list[ConditionRow]:
    rows = []
    for N in N_list:
        op = assemble_dense(cfg.field(), cfg.projection(), N, max_modes=max_modes)
        cq, cmq = condition_numbers(op, build_preconditioner(op), max_modes)
        rows.append(ConditionRow(N, cq, cmq))
    return rows


# ---------------------------------------------------------------------------
# PM vs PAM


PAM_METRIC = (
    "gamma_err_s = |gamma_s(PM reference) - gamma(PAM)| where the PAM state is the one of largest overlap "
    "with the PM reference state carried into the supercell basis"
)
PAM_FIELDS = ["L", "e_def", "e_scaled", "gamma_err_1", "gamma_err_2", "cpu_pm_seconds", "cpu_pam_seconds"]


@dataclass
class PamRow:
    L: int
    e_def: float
    e_scaled: float
    gamma_err_1: float
    gamma_err_2: float
    cpu_pm_seconds: float
    cpu_pam_seconds: float
    pam_eigenvalues: list[float] = field(default_factory=list)
    overlaps: list[float] = field(default_factory=list)


def pam_window(L: int, rule: str, target: float, pairs: int) -> int:
    """Supercell states below ``target`` are roughly plane waves with
    ``a_eff (2 pi j / q)^2 < target - 1``.  The effective coefficient of
    low states sits well below the mean, so a quarter of the mean is used."""
    A, P, _ = pam_problem(L, rule)
    w = float(P.entries[0, 0])
    a_eff = 0.25 * A.terms[(0,)].real
    jmax = math.sqrt(max(target - 1.0, 0.0) / a_eff) / w
    return int(2 * jmax + 1) + 2 * pairs + 8


def map_to_supercell(u: CoefficientField, L: int, N: int, rule: str = "nearest") -> np.ndarray:
    """Coefficients of a torus field in the supercell basis with ``D = L N`` modes.

    Torus modes that fold onto the same supercell mode are summed; modes
    outside the supercell band are dropped.
    """
    _, _, r = pam_problem(L, rule)
    D = L * N
    j = pm_to_pam_modes(u.index_set.indices, r)
    iset = build_index_set(D, 1)
    keep = iset.contains_array(j[:, None])
    out = np.zeros(D, dtype=complex)
    np.add.at(out, iset.linearize_array(j[keep][:, None]), u.coeffs[keep])
    return out


def run_pam_comparison(
    cfg: ExperimentConfig,
    L_list: Sequence[int],
    N: int = 16,
    pm_N: int | None = None,
    rule: str = "nearest",
    variant: str = "half-scaled",
    study: StudyResult | None = None,
) -> list[PamRow]:
    """First two tracked PM states (reference N) against the matching PAM states.

    The PM state is carried into the supercell basis and matched to the PAM
    eigenvector of largest overlap.  Timings are wall-clock of the PM solve at
    ``pm_N`` and of each PAM solve.
    """
    if study is None:
        study = run_convergence_study(cfg)
    ref, states = study.reference, study.reference_states[:2]
    pm_N = pm_N or max(cfg.N_list)
    t0 = time.perf_counter()
    solve_at(cfg, pm_N, len(states) + 1)
    pm_seconds = time.perf_counter() - t0
    target = float(np.max(ref.eigenvalues[states]))
    rows = []
    for L in L_list:
        approx = diophantine_error(L, rule)
        m = pam_window(L, rule, target, len(states))
        pam = pam_solve(L, N, m, rule, variant)
        U = _l2_columns(pam)
        errs, ovs, vals = [], [], []
        for s in states:
            w = map_to_supercell(ref.eigenvectors[s], L, N, rule)
            ov = np.abs(U.conj().T @ w) / max(np.linalg.norm(w), 1e-300)
            j = int(np.argmax(ov))
            vals.append(float(pam.eigenvalues[j]))
            errs.append(abs(float(ref.eigenvalues[s]) - float(pam.eigenvalues[j])))
            ovs.append(float(ov[j]))
        errs += [math.nan] * (2 - len(errs))
        rows.append(
            PamRow(L, approx.e_def, approx.e_scaled, errs[0], errs[1], pm_seconds, pam.wall_time, vals, ovs)
        )
    return rows


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def _parse(v: str, kind):
    if kind is bool:
        return v == "true"
    if kind is int:
        return int(v)
    if kind is float:
        return float(v)
    return v


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_records_csv(records: Sequence[ConvergenceRecord], path: str | Path) -> Path:
    return write_csv(path, RECORD_FIELDS, ([getattr(r, f) for f in RECORD_FIELDS] for r in records))


def read_records_csv(path: str | Path) -> list[ConvergenceRecord]:
    kinds = {f.name: f.type for f in dataclasses.fields(ConvergenceRecord)}
    types = {"int": int, "float": float, "bool": bool}
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(ConvergenceRecord(**{k: _parse(v, types[kinds[k]]) for k, v in row.items()}))
    return out


def write_plotdata(records: Sequence[ConvergenceRecord], out_dir: str | Path, stem: str = "convergence") -> list[Path]:
    """One whitespace-separated ``N error`` file per state and error kind."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for state in sorted({r.state for r in records}):
        rs = sorted((r for r in records if r.state == state), key=lambda r: r.N)
        for kind in ("eigenvalue_error", "eigenfunction_error"):
            p = out_dir / f"{stem}_state{state}_{kind}.dat"
            with p.open("w", encoding="utf-8") as fh:
                fh.write(f"# N {kind}\n")
                for r in rs:
                    fh.write(f"{r.N} {getattr(r, kind):.16e}\n")
            paths.append(p)
    return paths


def eigenfunction_trace(u: CoefficientField, P: ProjectionMatrix, x0: float, x1: float, samples: int,
                        direction: Sequence[float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``u(x)`` along ``x = t * direction`` for ``t`` in ``[x0, x1]``."""
    if samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(x0, x1, samples)
    e = np.zeros(P.d)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, dtype=float)
    vals = qp_evaluate(u.to_trig_field(), P, t[:, None] * e[None, :])
    return t, vals


def write_trace(path: str | Path, t: np.ndarray, vals: np.ndarray) -> Path:
    return write_csv(path, ["x", "re", "im", "abs"], zip(t, vals.real, vals.imag, np.abs(vals)))


def write_eigenresult_csv(res: EigenResult, path: str | Path) -> Path:
    return write_csv(
        path,
        ["index", "eigenvalue", "gamma_minus_one", "residual", "iterations", "converged"],
        ((j + 1, res.eigenvalues[j], res.eigenvalues[j] - 1.0, res.residual_norms[j], res.iterations,
          bool(res.converged[j])) for j in range(res.m)),
    )


def write_coefficients_csv(u: CoefficientField, path: str | Path) -> Path:
    header = [f"k_{j + 1}" for j in range(u.n)] + ["re", "im"]
    rows = (list(map(int, k)) + [c.real, c.imag] for k, c in zip(u.index_set.indices, u.coeffs))
    return write_csv(path, header, rows)


def emit_outputs(records: Sequence[ConvergenceRecord], out_dir: str | Path, formats: Sequence[str] = ("csv", "plotdata"),
                 stem: str = "convergence", metadata: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    paths = []
    for fmt in formats:
        if fmt == "csv":
            paths.append(write_records_csv(records, out_dir / f"{stem}.csv"))
        elif fmt == "plotdata":
            paths += write_plotdata(records, out_dir, stem)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
    meta = {
        "eigenvalue_error": "|gamma_ref - gamma_N| for the tracked state",
        "eigenfunction_error": "min over phase of ||e^{i phi} u_N - u_ref||_2 on Fourier coefficients, both L2-unit",
    }
    meta.update(metadata or {})
    p = out_dir / f"{stem}_meta.json"
    p.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    paths.append(p)
    return paths
