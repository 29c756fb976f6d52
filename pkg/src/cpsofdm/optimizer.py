"""Shaping-vector design by convex iteration and majorization-minimization.

The envelope-fluctuation objective is quartic in the shaping vector, so it is
lifted to a Hermitian matrix variable: with X = p p^H the objective becomes
vec(X)^H T vec(X) for a fixed kernel T assembled here, and the spectral,
noise-enhancement, and energy constraints are all linear or conic in X.  The
design then runs in two phases:

1. convex iteration: alternate an SDP whose objective is out-of-subband
   energy plus a weighted rank-pursuit term with a projector update onto the
   trailing eigenvectors, driving the iterate toward rank one.  Its converged
   energy value sets the spectral bound for phase two.
2. majorization-minimization: the concave part of the lifted quadratic is
   linearized at the current iterate, giving a linear-objective SDP per step;
   the true objective is nonincreasing along the iterates.

The final iterate is factored back into a shaping vector, which must satisfy
every constraint of the original problem to 1e-6.

The noise-enhancement constraint sum_i 1/d_i <= (1+eps)*S^2/rho (d_i the
transformed diagonal) is conic via 2x2 blocks [[d_i, 1], [1, t_i]] >= 0 with
sum t_i bounded.  Since sum_i d_i = rho always, the bound is attainable only
with every d_i equal when eps = 0; the feasible set collapses to the linear
slice d_i = rho/S, and that exact reformulation is used so the problem keeps
interior points for the conic solver.
"""

from dataclasses import dataclass, field

import csv
import os
import warnings

import cvxpy as cp
import numpy as np

from .config import WaveformConfig
from .errors import ConfigError, NumericError
from .shaping import ShapingSet, branch_dft_matrix

_SOLVER_OPTS = {
    "SCS": {"eps_abs": 1e-9, "eps_rel": 1e-9, "max_iters": 200000},
}

_OK_STATUSES = ("optimal", "optimal_inaccurate")


@dataclass(frozen=True)
class OptimizerParams:
    osbep_factor: float = 10.0     # spectral bound = factor * attainable minimum
    nep_tolerance: float = 0.0     # eps in the noise-enhancement bound
    ci_weight: float = 1000.0      # rank-pursuit weight in phase one
    ci_tol: float = 1e-8
    mm_tol: float = 1e-10
    max_ci_iters: int = 200
    max_mm_iters: int = 2000
    rank_one_tol: float = 1e-5
    solver: str = "CLARABEL"

    def __post_init__(self):
        if self.osbep_factor < 1:
            raise ConfigError("osbep_factor must be at least 1")
        if self.nep_tolerance < 0:
            raise ConfigError("nep_tolerance must be nonnegative")
        if min(self.ci_weight, self.ci_tol, self.mm_tol, self.rank_one_tol) <= 0:
            raise ConfigError("weights and tolerances must be positive")
        if min(self.max_ci_iters, self.max_mm_iters) < 1:
            raise ConfigError("iteration caps must be positive")


@dataclass(frozen=True)
class QuarticKernel:
    """Lifted fourth-moment kernel with its spectral diagnostics."""
    matrix: np.ndarray
    n_active: int
    max_eig: float
    min_eig: float

    def quadratic_form(self, x: np.ndarray) -> float:
        v = np.asarray(x).reshape(-1, order="F")
        return float(np.real(v.conj() @ self.matrix @ v))


def build_quartic_kernel(cfg: WaveformConfig, es: float = 1.0,
                         fourth_moment: float = 1.32,
                         max_dimension: int = 48) -> QuarticKernel:
    """Assemble the S^2 x S^2 kernel of the mean fourth power of the envelope.

    For a lifted rank-one X = p p^H the quadratic form reproduces the direct
    per-sample fourth-moment average of the transmitted core block.  The
    kernel is dense; sizes beyond max_dimension active subcarriers are
    refused before allocating.
    """
    s = cfg.n_active
    if s > max_dimension:
        raise ConfigError(
            f"kernel would be {s * s}x{s * s}; raise max_dimension past {s} "
            "to allow this size")
    n, m_len = cfg.nfft, cfg.branch_len
    i = np.arange(s)
    slot_ph = np.exp(2j * np.pi * np.outer(np.asarray(cfg.active_slots), i) / m_len)
    shifts = [k * m_len for k in cfg.active_branches]
    t_mat = np.zeros((s * s, s * s), dtype=complex)
    for t_idx in range(n):
        e_rows = slot_ph * np.exp(-2j * np.pi * i * t_idx / n) / np.sqrt(n * m_len)
        u_rows = np.concatenate([np.roll(e_rows, -sh, axis=1) for sh in shifts])
        # column-major vec of each rank-one u u^H
        w_rows = np.einsum("ji,jk->jki", u_rows, u_rows.conj()).reshape(len(u_rows), -1)
        pair_sum = w_rows.T @ w_rows.conj()
        agg = u_rows.T @ u_rows.conj()
        t_mat += (fourth_moment - 2.0 * es ** 2) * pair_sum \
            + 2.0 * es ** 2 * np.kron(agg.T, agg)
    t_mat /= n
    t_mat = (t_mat + t_mat.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(t_mat)
    return QuarticKernel(matrix=t_mat, n_active=s,
                         max_eig=float(eigs[-1]), min_eig=float(eigs[0]))


def lambda_max(matrix: np.ndarray) -> float:
    """Largest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(matrix)[-1])


def surrogate_direction(x: np.ndarray, kernel: QuarticKernel) -> np.ndarray:
    """Hermitian linearization direction of the concave-shifted objective.

    The kernel minus (a hair over) its top eigenvalue is negative
    semidefinite; the tangent of that concave part at x has slope matrix
    reshape((T - lambda I) vec x), symmetrized.
    """
    s = kernel.n_active
    v = np.asarray(x).reshape(-1, order="F")
    shifted = kernel.matrix @ v - (1.0 + 1e-9) * kernel.max_eig * v
    e = shifted.reshape(s, s, order="F")
    return (e + e.conj().T) / 2.0


def _nep_diagonal_rows(n_branches: int, branch_len: int) -> np.ndarray:
    """Rows f_i with d_i = f_i X f_i^H the transformed diagonal entries."""
    return branch_dft_matrix(n_branches, branch_len)


def _base_constraints(x, rows, rho, eps):
    s = rows.shape[0]
    cons = [x >> 0]
    d = [cp.real(rows[i] @ x @ rows[i].conj()) for i in range(s)]
    if eps == 0:
        # the reciprocal-sum bound S^2/rho is met only by an equal split of
        # the fixed total sum(d) = rho, so impose that slice directly; the
        # trace constraint is the sum of these rows (the transform is
        # unitary) and repeating it would make the equality block singular
        cons += [di == rho / s for di in d]
    else:
        cons.append(cp.real(cp.trace(x)) == rho)
        t = cp.Variable(s)
        one = np.ones((1, 1))
        for i in range(s):
            blk = cp.bmat([[cp.reshape(d[i], (1, 1), order="F"), one],
                           [one, cp.reshape(t[i], (1, 1), order="F")]])
            cons.append(blk >> 0)
        cons.append(cp.sum(t) <= (1.0 + eps) * s * s / rho)
    return cons


def _scaled_cost(c_mat: np.ndarray) -> np.ndarray:
    """Unit-norm Hermitian copy of a cost matrix.

    The rank-pursuit weight dwarfs the leakage kernel by many orders of
    magnitude; feeding the raw sum to an interior-point solver stalls its
    line search, while a positive scalar rescale leaves the minimizer
    untouched.
    """
    h = (c_mat + c_mat.conj().T) / 2.0
    scale = np.linalg.norm(h)
    return h / scale if scale > 0 else h


def _run_solver(problem, solver: str):
    opts = _SOLVER_OPTS.get(solver, {})
    try:
        with warnings.catch_warnings():
            # status is checked below; the advisory warning just adds noise
            warnings.filterwarnings("ignore", message="Solution may be inaccurate")
            problem.solve(solver=solver, **opts)
    except cp.error.SolverError as exc:
        raise NumericError(f"conic solver {solver} failed: {exc}") from None
    if problem.status not in _OK_STATUSES:
        raise NumericError(f"subproblem ended with status {problem.status!r}")


def solve_ci_subproblem(direction_b: np.ndarray, omega_mat: np.ndarray,
                        n_branches: int, branch_len: int, rho: float,
                        params: OptimizerParams) -> np.ndarray:
    """One rank-pursuit step: spectral leakage plus weighted projector overlap."""
    s = n_branches * branch_len
    x = cp.Variable((s, s), hermitian=True)
    rows = _nep_diagonal_rows(n_branches, branch_len)
    cost = _scaled_cost(params.ci_weight * direction_b + omega_mat)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(cost @ x))),
                      _base_constraints(x, rows, rho, params.nep_tolerance))
    _run_solver(prob, params.solver)
    val = x.value
    return (val + val.conj().T) / 2.0


def solve_mm_subproblem(v_mat: np.ndarray, omega_mat: np.ndarray, bound: float,
                        n_branches: int, branch_len: int, rho: float,
                        params: OptimizerParams) -> np.ndarray:
    """One descent step: linear surrogate objective under the spectral bound."""
    s = n_branches * branch_len
    x = cp.Variable((s, s), hermitian=True)
    rows = _nep_diagonal_rows(n_branches, branch_len)
    cons = _base_constraints(x, rows, rho, params.nep_tolerance)
    cons.append(cp.real(cp.trace(omega_mat @ x)) <= bound)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(_scaled_cost(v_mat) @ x))), cons)
    _run_solver(prob, params.solver)
    val = x.value
    return (val + val.conj().T) / 2.0


def build_direction_matrix(y: np.ndarray) -> np.ndarray:
    """Projector onto the trailing eigenvectors (all but the principal one)."""
    h = (y + y.conj().T) / 2.0
    _, vecs = np.linalg.eigh(h)    # ascending
    tail = vecs[:, :-1]
    return tail @ tail.conj().T


def rank_ratio(x: np.ndarray) -> float:
    """Second-to-first eigenvalue ratio; 0 for exactly rank-one matrices."""
    vals = np.linalg.eigvalsh((x + x.conj().T) / 2.0)
    top = vals[-1]
    if top <= 0:
        return float("inf")
    return float(max(vals[-2], 0.0) / top) if len(vals) > 1 else 0.0


def extract_rank_one(x: np.ndarray, tol: float = 1e-5) -> np.ndarray:
    """Factor a numerically rank-one PSD matrix as p p^H.

    The global phase is fixed by making the largest-magnitude entry of p real
    positive.  Raises when the trailing spectrum is not negligible.
    """
    h = (x + x.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(h)
    ratio = rank_ratio(h)
    if ratio > tol:
        raise NumericError(
            f"iterate is not rank one: eigenvalue ratio {ratio:.3e} > {tol:.1e}")
    p = np.sqrt(max(vals[-1], 0.0)) * vecs[:, -1]
    pivot = int(np.argmax(np.abs(p)))
    phase = np.angle(p[pivot])
    return p * np.exp(-1j * phase)


@dataclass
class DesignResult:
    shaping: ShapingSet
    u_min: float
    osbep_bound: float
    trace: list = field(default_factory=list)
    kernel_max_eig: float = 0.0
    kernel_min_eig: float = 0.0

    def write_trace(self, path: str):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["phase", "iteration", "objective", "surrogate",
                         "osbep", "nep", "rank_ratio"])
            for row in self.trace:
                wr.writerow([row["phase"], row["iteration"],
                             repr(row["objective"]),
                             "" if row.get("surrogate") is None
                             else repr(row["surrogate"]),
                             repr(row["osbep"]), repr(row["nep"]),
                             repr(row["rank_ratio"])])


class _StageSolver:
    """Compiled parametric subproblems reused across iterations of one run."""

    def __init__(self, omega_mat, n_branches, branch_len, rho, params):
        s = n_branches * branch_len
        self.params = params
        rows = _nep_diagonal_rows(n_branches, branch_len)

        self.omega_mat = omega_mat
        self.ci_cost = cp.Parameter((s, s), hermitian=True)
        x1 = cp.Variable((s, s), hermitian=True)
        self._ci_x = x1
        self._ci = cp.Problem(cp.Minimize(cp.real(cp.trace(self.ci_cost @ x1))),
                              _base_constraints(x1, rows, rho, params.nep_tolerance))

        self.mm_cost = cp.Parameter((s, s), hermitian=True)
        self.mm_bound = cp.Parameter(nonneg=True)
        x2 = cp.Variable((s, s), hermitian=True)
        cons2 = _base_constraints(x2, rows, rho, params.nep_tolerance)
        cons2.append(cp.real(cp.trace(omega_mat @ x2)) <= self.mm_bound)
        self._mm_x = x2
        self._mm = cp.Problem(cp.Minimize(cp.real(cp.trace(self.mm_cost @ x2))),
                              cons2)

    def ci_step(self, direction_b):
        self.ci_cost.value = _scaled_cost(
            self.params.ci_weight * direction_b + self.omega_mat)
        _run_solver(self._ci, self.params.solver)
        val = self._ci_x.value
        return (val + val.conj().T) / 2.0

    def mm_step(self, v_mat, bound):
        self.mm_cost.value = _scaled_cost(v_mat)
        self.mm_bound.value = bound
        _run_solver(self._mm, self.params.solver)
        val = self._mm_x.value
        return (val + val.conj().T) / 2.0


def _nep_of_iterate(x: np.ndarray, rows: np.ndarray) -> float:
    d = np.real(np.einsum("ia,ab,ib->i", rows, x, rows.conj()))
    if np.any(d <= 0):
        return float("inf")
    return float(np.sum(1.0 / d))


def design_shaping(cfg: WaveformConfig, omega_mat: np.ndarray,
                   params: OptimizerParams = None, es: float = 1.0,
                   fourth_moment: float = 1.32,
                   energy: float = None) -> DesignResult:
    """Full two-phase design; returns the shaping vector and iteration trace.

    omega_mat is the spectral-leakage kernel for cfg (see metrics); energy
    defaults to branch_len, the scale on which an eps = 0 design is unitary.
    """
    params = params or OptimizerParams()
    rho = float(cfg.branch_len if energy is None else energy)
    if rho <= 0:
        raise ConfigError("shaping energy must be positive")
    s = cfg.n_active
    if omega_mat.shape != (s, s):
        raise ConfigError(f"leakage kernel must be {s}x{s} for this layout")
    kernel = build_quartic_kernel(cfg, es=es, fourth_moment=fourth_moment)
    rows = _nep_diagonal_rows(cfg.n_branches, cfg.branch_len)
    stage = _StageSolver(omega_mat, cfg.n_branches, cfg.branch_len, rho, params)
    trace = []

    # phase one: rank pursuit toward the attainable leakage minimum
    direction = np.zeros((s, s), dtype=complex)
    y = None
    u_prev = None
    u_min = None
    for it in range(params.max_ci_iters):
        y = stage.ci_step(direction)
        u = float(np.real(np.trace(omega_mat @ y)))
        pursuit = float(np.real(np.trace(direction @ y)))
        trace.append({"phase": "ci", "iteration": it,
                      "objective": params.ci_weight * pursuit + u,
                      "surrogate": None, "osbep": u,
                      "nep": _nep_of_iterate(y, rows),
                      "rank_ratio": rank_ratio(y)})
        if u_prev is not None and abs(u - u_prev) <= params.ci_tol:
            u_min = u
            break
        u_prev = u
        direction = build_direction_matrix(y)
    if u_min is None:
        raise NumericError(
            f"rank pursuit did not converge in {params.max_ci_iters} iterations")

    # phase two: monotone descent under the widened leakage bound
    bound = params.osbep_factor * u_min
    x = y
    g_prev = None
    done = False
    for it in range(params.max_mm_iters):
        v_mat = surrogate_direction(x, kernel)
        x = stage.mm_step(v_mat, bound)
        g = float(np.real(np.trace(v_mat @ x)))
        trace.append({"phase": "mm", "iteration": it,
                      "objective": kernel.quadratic_form(x),
                      "surrogate": g,
                      "osbep": float(np.real(np.trace(omega_mat @ x))),
                      "nep": _nep_of_iterate(x, rows),
                      "rank_ratio": rank_ratio(x)})
        if g_prev is not None and abs(g - g_prev) <= params.mm_tol:
            done = True
            break
        g_prev = g
    if not done:
        raise NumericError(
            f"descent did not converge in {params.max_mm_iters} iterations")

    p = extract_rank_one(x, params.rank_one_tol)
    # the factor carries only the dominant eigenvalue's share of the energy
    # budget; put the discarded trailing mass back by renormalizing
    p *= np.sqrt(rho) / np.linalg.norm(p)
    shaping = ShapingSet(p, cfg.n_branches, cfg.branch_len)
    _verify_design(shaping, omega_mat, rows, rho, bound, params)
    return DesignResult(shaping=shaping, u_min=u_min, osbep_bound=bound,
                        trace=trace, kernel_max_eig=kernel.max_eig,
                        kernel_min_eig=kernel.min_eig)


def _verify_design(shaping: ShapingSet, omega_mat, rows, rho, bound, params,
                   slack: float = 1e-6):
    p = shaping.shaping
    leak = float(np.real(p.conj() @ omega_mat @ p))
    if leak > bound + slack:
        raise NumericError(f"designed vector leaks {leak:.3e} > bound {bound:.3e}")
    d = np.abs(rows @ p) ** 2
    nep_val = float("inf") if np.any(d == 0) else float(np.sum(1.0 / d))
    limit = (1.0 + params.nep_tolerance) * len(p) ** 2 / rho
    if nep_val > limit + slack:
        raise NumericError(
            f"designed vector noise penalty {nep_val:.6f} exceeds {limit:.6f}")
    if abs(shaping.energy - rho) > slack:
        raise NumericError(
            f"designed vector energy {shaping.energy:.8f} drifted from {rho}")
