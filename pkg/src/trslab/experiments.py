"""Problem generators, reference solutions and the experiment harness.

Five named families cover the representative eigenvalue distributions used
to exercise the solver: evenly spaced indefinite, piecewise exponential,
translated Chebyshev nodes, the Strakos spectrum, and a scaled symmetrized
Gaussian matrix.  Families with a prescribed spectrum are built as diagonal
operators: every measured and bounded quantity depends only on the spectrum
and on the coefficients of the (rotation-invariant) random gradient in the
eigenbasis.  An optional seeded orthogonal similarity is available for
full-matrix runs at moderate sizes.

The harness runs the solver with per-iteration verification, measures every
error against an independently computed reference solution, evaluates the
whole bound catalogue per iteration, and emits a CSV, a gnuplot script and
a summary JSON for each run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from .augmented import (
    AugmentedOperator,
    assemble_projected,
    eigpair_from_trs,
    gamma_tilde,
    separation,
    solution_sine,
    spectral_condition,
    subspace_sine,
)
from .gltr import gltr_solve
from .lanczos import lanczos_run
from .linalg import (
    SymmetricLinearOperator,
    extremal_eig_tridiagonal,
    operator_norm_2,
    solve_shifted,
    solve_spd_operator,
)
from .mmio import read_matrix_market, read_vector
from .trs import BOUNDARY, solve_trs_spectral

FAMILIES = ("1a", "1b", "2", "3", "4", "file")

CSV_COLUMNS = [
    "k",
    "lambda_gap",
    "lambda_gap_bound",
    "sin_angle",
    "sin_angle_bound",
    "q_gap",
    "q_gap_bound",
    "resid",
    "resid_formula",
    "resid_bound",
    "s_gap",
    "s_gap_bound",
    "cg_gap",
    "cg_gap_bound",
]


class InvalidSpec(Exception):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    n: int
    delta: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}")
        if self.family != "file" and self.n < 2:
            raise InvalidSpec("n must be >= 2")
        if self.delta <= 0.0:
            raise InvalidSpec("delta must be positive")

    def to_json(self):
        return json.dumps(
            {
                "family": self.family,
                "n": self.n,
                "delta": self.delta,
                "seed": self.seed,
                "params": self.params,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        extra = set(data) - {"family", "n", "delta", "seed", "params"}
        if extra:
            raise InvalidSpec(f"unknown spec fields {sorted(extra)}")
        return cls(
            family=data["family"],
            n=int(data["n"]),
            delta=float(data.get("delta", 1.0)),
            seed=int(data.get("seed", 0)),
            params=dict(data.get("params", {})),
        )


def default_spec(name, n=None, seed=0, delta=1.0):
    """ProblemSpec for a named family at its default size."""
    if name not in ("1a", "1b", "2", "3", "4"):
        raise InvalidSpec(f"unknown experiment name {name!r}")
    if n is None:
        n = 2000 if name == "4" else 10000
    return ProblemSpec(family=name, n=n, delta=delta, seed=seed)


def _spectrum_evenly(n):
    i = np.arange(1, n + 1)
    return np.where(i <= n // 2, -2.0 + 4.0 / n * (i - 1), 2.0 - 4.0 / n * (n - i))


def _spectrum_exponential(n):
    i = np.arange(1, n + 1)
    return np.where(i <= n // 2, -np.exp(2.0 * i / n), np.exp((2.0 * i - n) / n))


def _spectrum_chebyshev_nodes(n, a, b):
    j = np.arange(1, n + 1)
    nodes = np.cos((2.0 * j - 1.0) * np.pi / (2.0 * n))
    return (b - a) / 2.0 * (nodes + (a + b) / (b - a))


def _spectrum_strakos(n, alpha1, alpha_n, rho):
    # ascending from the smallest eigenvalue: the bulk clusters at alpha_n
    # and the large eigenvalues are geometrically separated up to alpha1
    i = np.arange(1, n + 1)
    return alpha_n + (i - 1.0) / (n - 1.0) * (alpha1 - alpha_n) * rho ** (n - i)


class HouseholderSimilarityOperator(SymmetricLinearOperator):
    """R D R^T with R a short product of seeded Householder reflectors.

    Exact spectrum D with a dense-acting, non-diagonal representation; used
    for full-fidelity variants of the diagonal families.
    """

    def __init__(self, d, reflectors):
        self.eigenvalue_vector = np.asarray(d, dtype=float)
        self.reflectors = [u / np.linalg.norm(u) for u in reflectors]
        super().__init__(self.eigenvalue_vector.size, self._apply_similarity)

    def _apply_r(self, v):
        for u in reversed(self.reflectors):
            v = v - 2.0 * (u @ v) * u
        return v

    def _apply_rt(self, v):
        for u in self.reflectors:
            v = v - 2.0 * (u @ v) * u
        return v

    def _apply_similarity(self, v):
        return self._apply_r(self.eigenvalue_vector * self._apply_rt(v))

    def to_eigenbasis(self, v):
        return self._apply_rt(v)

    def from_eigenbasis(self, w):
        return self._apply_r(w)


def generate(spec):
    """Build (A, g) for a problem spec; g is a seeded unit Gaussian vector."""
    rng = np.random.default_rng(spec.seed)
    params = dict(spec.params)
    similarity = bool(params.pop("orthogonal_similarity", False))
    n = spec.n

    if spec.family == "1a":
        d = _spectrum_evenly(n)
    elif spec.family == "1b":
        d = _spectrum_exponential(n)
    elif spec.family == "2":
        a = float(params.pop("a", -5.0))
        b = float(params.pop("b", 5.0))
        if not b > a:
            raise InvalidSpec("interval must satisfy b > a")
        d = _spectrum_chebyshev_nodes(n, a, b)
    elif spec.family == "3":
        alpha1 = float(params.pop("alpha1", 8.0))
        alpha_n = float(params.pop("alpha_n", -2.0))
        rho = float(params.pop("rho", 0.99))
        if not 0.0 < rho <= 1.0:
            raise InvalidSpec("rho must lie in (0, 1]")
        d = _spectrum_strakos(n, alpha1, alpha_n, rho)
    elif spec.family == "4":
        if similarity:
            raise InvalidSpec("orthogonal_similarity does not apply to family 4")
        G = rng.standard_normal((n, n))
        dense = G + G.T
        g = rng.standard_normal(n)
        g /= float(np.linalg.norm(g))
        lo, hi = _extremal_estimate_dense(dense, seed=spec.seed + 1)
        dense /= max(abs(lo), abs(hi))
        if params:
            raise InvalidSpec(f"unknown params {sorted(params)} for family 4")
        return SymmetricLinearOperator.from_dense(dense), g
    elif spec.family == "file":
        path = params.pop("path", None)
        if path is None:
            raise InvalidSpec("family 'file' requires params['path']")
        n_file, rows, cols, vals = read_matrix_market(path)
        A = SymmetricLinearOperator.from_triplets(n_file, rows, cols, vals)
        gpath = params.pop("gradient_path", None)
        if gpath is not None:
            g = read_vector(gpath)
            if g.size != n_file:
                raise InvalidSpec(f"gradient length {g.size} != matrix order {n_file}")
        else:
            g = rng.standard_normal(n_file)
            g /= float(np.linalg.norm(g))
        if params:
            raise InvalidSpec(f"unknown params {sorted(params)} for family 'file'")
        return A, g
    else:  # pragma: no cover - guarded by ProblemSpec
        raise InvalidSpec(spec.family)

    if params:
        raise InvalidSpec(f"unknown params {sorted(params)} for family {spec.family}")
    g = rng.standard_normal(n)
    g /= float(np.linalg.norm(g))
    if similarity:
        if n > 2000:
            raise InvalidSpec("orthogonal_similarity is limited to n <= 2000")
        reflectors = [rng.standard_normal(n) for _ in range(2)]
        return HouseholderSimilarityOperator(d, reflectors), g
    return SymmetricLinearOperator.from_diagonal(d), g


def _extremal_estimate_dense(dense, seed, steps=None, tol=1e-12):
    op = SymmetricLinearOperator.from_dense(dense)
    return estimate_extremal_eigenvalues(op, seed=seed, steps=steps, tol=tol)


def estimate_extremal_eigenvalues(A, seed=0, steps=None, tol=1e-12):
    """Extremal eigenvalues of a symmetric operator via a seeded Krylov run."""
    n = A.dim
    if steps is None:
        steps = min(n - 1, 260)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(n)
    fact = lanczos_run(A, start, steps)
    lo, hi = extremal_eig_tridiagonal(fact.tridiag, tol=tol)
    return lo, hi


@dataclass
class ReferenceSolution:
    lambda_opt: float
    s_opt: np.ndarray
    q_opt: float
    alpha1: float
    alpha_n: float
    kappa: float
    t: float
    m_norm: float
    y1_norm: float
    y1: np.ndarray
    y2: np.ndarray


def reference_solution(A, g, delta, tol=1e-14, m_norm_tol=1e-8, m_norm_maxit=20000):
    """High-accuracy reference (lambda_opt, s_opt, ...) for error measurement.

    Operators with a known spectrum get a direct secular solve in the
    eigenbasis; general operators are solved by the Krylov driver at a
    tighter residual tolerance than any measured run.
    """
    g = np.asarray(g, dtype=float)
    beta0 = float(np.linalg.norm(g))

    if A.diagonal is not None:
        theta = A.diagonal
        lam, s_eig, _, case = solve_trs_spectral(theta, g, delta, tol=tol)
        s_opt = s_eig
        q_opt = float(g @ s_opt + 0.5 * np.sum(theta * s_opt * s_opt))
        alpha1 = float(theta.max())
        alpha_n = float(theta.min())
        y2_raw = s_opt / (theta + lam)
    elif hasattr(A, "eigenvalue_vector"):
        theta = A.eigenvalue_vector
        c = A.to_eigenbasis(g)
        lam, s_eig, _, case = solve_trs_spectral(theta, c, delta, tol=tol)
        s_opt = A.from_eigenbasis(s_eig)
        q_opt = float(c @ s_eig + 0.5 * np.sum(theta * s_eig * s_eig))
        alpha1 = float(theta.max())
        alpha_n = float(theta.min())
        y2_raw = A.from_eigenbasis(s_eig / (theta + lam))
    else:
        run = gltr_solve(A, g, delta, resid_tol=tol, k_max=600)
        lam = run.lam
        s_opt = run.s
        q_opt = run.q
        alpha_n, alpha1 = estimate_extremal_eigenvalues(A, seed=1_000_003)
        y2_raw = solve_spd_operator(lambda v: A.apply(v) + lam * v, s_opt, tol=1e-13)

    sd = bnd.spectrum_data(alpha1, alpha_n, lam, beta0, delta)
    m_op = AugmentedOperator(A, g, delta)
    m_norm = operator_norm_2(m_op, tol=m_norm_tol, maxit=m_norm_maxit, seed=7).value

    stack_norm = math.sqrt(float(s_opt @ s_opt + y2_raw @ y2_raw))
    y1 = s_opt / stack_norm
    y2 = y2_raw / stack_norm
    return ReferenceSolution(
        lambda_opt=lam,
        s_opt=s_opt,
        q_opt=q_opt,
        alpha1=alpha1,
        alpha_n=alpha_n,
        kappa=sd.kappa,
        t=sd.t,
        m_norm=m_norm,
        y1_norm=float(np.linalg.norm(y1)),
        y1=y1,
        y2=y2,
    )


@dataclass
class ExperimentTable:
    columns: dict

    @property
    def nrows(self):
        return len(self.columns["k"])

    def column(self, name):
        return self.columns[name]


@dataclass
class ExperimentResult:
    spec: ProblemSpec
    reference: ReferenceSolution
    run: object
    table: ExperimentTable
    summary: dict
    diagnostics: dict | None = None


def run_experiment(
    spec,
    k_max=300,
    resid_tol=1e-13,
    checkpoint_every=5,
    diagnostics=False,
):
    """Run a family end to end and assemble the per-iteration error/bound table.

    The separation-based angle bound is evaluated at checkpoint iterations
    (it costs dense work at size 2(k+1)); other columns exist at every k.
    """
    A, g = generate(spec)
    ref = reference_solution(A, g, spec.delta)
    beta0 = float(np.linalg.norm(g))
    delta = spec.delta
    sd = bnd.spectrum_data(ref.alpha1, ref.alpha_n, ref.lambda_opt, beta0, delta)

    run = gltr_solve(
        A,
        g,
        delta,
        resid_tol=resid_tol,
        k_max=k_max,
        verify_residuals=True,
        keep_iterates=True,
    )
    records = run.history
    nk = len(records)
    tridiag = run.factorization.tridiag
    last_k = records[-1].k
    checkpoints = set(range(0, last_k + 1, max(checkpoint_every, 1)))
    checkpoints.add(last_k)

    # reference value of the leading resolvent moment, from the closed-form
    # objective identity at the optimum
    ref_moment = -(2.0 * ref.q_opt + ref.lambda_opt * delta * delta) / (beta0 * beta0)

    cols = {name: np.full(nk, np.nan) for name in CSV_COLUMNS}
    cols["k"] = np.array([r.k for r in records], dtype=float)
    diag_data = {
        "subspace_sine": np.full(nk, np.nan),
        "subspace_sine_bound": np.full(nk, np.nan),
        "spectral_condition": np.full(nk, np.nan),
        "sep": np.full(nk, np.nan),
        "eta1": np.full(nk, np.nan),
        "eta2": np.full(nk, np.nan),
        "eta1_cap": np.full(nk, np.nan),
        "eta2_cap": np.full(nk, np.nan),
    }

    e_first = np.zeros(tridiag.order)
    e_first[0] = 1.0
    for idx, rec in enumerate(records):
        k = rec.k
        h, s_k = run.iterates[idx]
        t_k = tridiag.leading(k + 1)

        cols["lambda_gap"][idx] = ref.lambda_opt - rec.lam
        cols["q_gap"][idx] = rec.q - ref.q_opt
        sine, _ = solution_sine(s_k, ref.s_opt)
        cols["sin_angle"][idx] = sine
        cols["s_gap"][idx] = float(np.linalg.norm(s_k - ref.s_opt))
        cols["resid"][idx] = rec.resid_explicit
        cols["resid_formula"][idx] = rec.resid_formula

        x = solve_shifted(t_k, ref.lambda_opt, e_first[: k + 1])
        moment1 = float(x[0])
        moment2 = float(x @ x)
        denom = delta * delta + beta0 * beta0 * moment2
        eta1 = beta0 * beta0 / denom
        eta2 = 2.0 / denom
        cols["cg_gap"][idx] = ref_moment - moment1
        cols["cg_gap_bound"][idx] = bnd.cg_energy_bound(k, sd)
        cols["lambda_gap_bound"][idx] = bnd.lambda_gap_bound(k, sd, eta1, eta2)
        cols["q_gap_bound"][idx] = bnd.q_gap_bound(k, sd)
        cols["s_gap_bound"][idx] = bnd.s_gap_bound(k, sd)
        cols["resid_bound"][idx] = bnd.residual_bound(k, sd, eta1, eta2)
        diag_data["eta1"][idx] = eta1
        diag_data["eta2"][idx] = eta2
        a_shift = ref.alpha1 + ref.lambda_opt
        cap_denom = beta0 * beta0 + a_shift * a_shift * delta * delta
        diag_data["eta1_cap"][idx] = beta0 * beta0 * a_shift * a_shift / cap_denom
        diag_data["eta2_cap"][idx] = 2.0 * a_shift * a_shift / cap_denom

        if k in checkpoints and rec.case == BOUNDARY:
            pair = eigpair_from_trs(t_k, rec.lam, h, beta0=beta0, delta=delta)
            mk = assemble_projected(t_k, beta0, delta)
            sep = separation(mk, pair.vector, ref.lambda_opt)
            diag_data["sep"][idx] = sep
            if sep > 0.0:
                cols["sin_angle_bound"][idx] = bnd.sin_angle_bound(k, sd, ref.m_norm, sep)
            diag_data["spectral_condition"][idx] = spectral_condition(
                t_k, rec.lam, pair.z1, pair.z2
            )

        if diagnostics:
            basis_k = run.factorization.basis[:, : k + 1]
            diag_data["subspace_sine"][idx] = subspace_sine(ref.y1, ref.y2, basis_k)
            diag_data["subspace_sine_bound"][idx] = bnd.sin_subspace_bound(
                k, sd, ref.y1_norm
            )

    table = ExperimentTable(columns=cols)
    summary = _summary(spec, ref, run, sd, beta0)
    extra = None
    if diagnostics:
        m_op = AugmentedOperator(A, g, delta)
        final_basis = run.factorization.basis
        gamma_final = gamma_tilde(m_op, final_basis)
        extra = dict(diag_data)
        extra["gamma_tilde_final"] = gamma_final
    else:
        extra = {key: diag_data[key] for key in ("sep", "eta1", "eta2", "eta1_cap", "eta2_cap", "spectral_condition")}
    return ExperimentResult(
        spec=spec, reference=ref, run=run, table=table, summary=summary, diagnostics=extra
    )


def _summary(spec, ref, run, sd, beta0):
    rounded = {
        "alpha1": round(ref.alpha1, 4),
        "alpha_n": round(ref.alpha_n, 4),
        "kappa": round(ref.kappa, 4),
        "t": round(ref.t, 4),
        "lambda_opt": round(ref.lambda_opt, 4),
        "q_opt": round(ref.q_opt, 4),
    }
    return {
        "family": spec.family,
        "n": spec.n,
        "delta": spec.delta,
        "seed": spec.seed,
        "params": spec.params,
        "beta0": beta0,
        "alpha1": ref.alpha1,
        "alpha_n": ref.alpha_n,
        "kappa": ref.kappa,
        "t": ref.t,
        "lambda_opt": ref.lambda_opt,
        "q_opt": ref.q_opt,
        "m_norm": ref.m_norm,
        "y1_norm": ref.y1_norm,
        "iterations": run.iterations,
        "final_k": run.history[-1].k,
        "termination": run.termination,
        "rounded": rounded,
    }


def emit_csv(table, path):
    """Write the table with full-precision decimal values and LF endings."""
    if table.nrows == 0:
        raise ValueError("refusing to emit an empty table")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(table.nrows):
            parts = [str(int(table.columns["k"][i]))]
            for name in CSV_COLUMNS[1:]:
                parts.append(format(float(table.columns[name][i]), ".17g"))
            fh.write(",".join(parts) + "\n")


def parse_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        names = header.split(",")
        if names != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    cols = {
        name: np.array([float(row[j]) for row in rows]) for j, name in enumerate(CSV_COLUMNS)
    }
    return ExperimentTable(columns=cols)


PLOT_PANELS = [
    ("(a) multiplier gap", "lambda_gap", "lambda_gap_bound"),
    ("(b) solution angle", "sin_angle", "sin_angle_bound"),
    ("(c) objective gap", "q_gap", "q_gap_bound"),
    ("(d) residual norm", "resid", "resid_bound"),
]


def emit_plot_script(table, path, csv_name):
    """Self-contained gnuplot script: four log-scale panels, one per error."""
    if table.nrows == 0:
        raise ValueError("refusing to emit a plot for an empty table")
    col_index = {name: i + 1 for i, name in enumerate(CSV_COLUMNS)}
    lines = [
        "set terminal pngcairo size 1200,820",
        f"set output '{csv_name.rsplit('.', 1)[0]}.png'",
        "set datafile separator ','",
        "set multiplot layout 2,2",
        "set logscale y",
        "set format y '%.0e'",
        "set xlabel 'k'",
        "clip(v) = (v < 1e-16 ? 1e-16 : v)",
    ]
    for title, err, bound in PLOT_PANELS:
        ie, ib = col_index[err], col_index[bound]
        lines.append(f"set title '{title}'")
        lines.append(
            f"plot '{csv_name}' skip 1 using 1:(clip(${ie})) with points pt 7 ps 0.5 title 'measured', "
            f"'{csv_name}' skip 1 using 1:(clip(${ib})) with lines lw 2 title 'bound'"
        )
    lines.append("unset multiplot")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_summary(summary, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
