"""Signal recovery solvers: inpainting, matrix completion, anomaly detection.

All solvers share one measurement model. A smooth ground-truth signal is
observed through ``T = X0 + noise + outliers`` on an accessible index set M;
everything outside M is hidden. Smoothness is measured by quadratic total
variation ``||X - A X||_F^2`` for a normalized shift A.

Closed forms
    gtvm   equality-constrained variation minimization (noiseless inpainting)
    gtvr   variation-regularized least squares (noisy inpainting)

Proximal gradient
    gmcm   matrix completion, measured entries pinned exactly
    gmcr   matrix completion, measured entries fitted in least squares
    anomaly_detect            sparse-outlier detection, penalized form
    anomaly_detect_constrained  bisection wrapper enforcing a smoothness cap

ADMM
    rgtvr     inpainting robust to sparse corruption of the measurements
    gsr_admm  the full model: smoothness + low rank + sparse outliers + noise

Iterative solvers stop when the objective changes by less than
``config.tol_outer`` between consecutive iterations (ADMM solvers additionally
require the coupling constraints to hold to 1e-6 relative); hitting
``config.max_outer`` first returns the last iterate with ``converged=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DimensionMismatch,
    EmptyAccessibleSet,
    Infeasible,
    NonFiniteObjective,
)
from .graph import GraphShift, _require_normalized, tilde_shift
from .prox import StepSearchConfig, shrink, svt

# Relative feasibility tolerance for the ADMM coupling constraints.
FEAS_RTOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Weights and iteration controls shared by every solver.

    alpha weights quadratic variation, beta the nuclear norm, gamma the
    outlier l1 norm, epsilon records a noise budget (informational), penalty
    is the ADMM penalty parameter.
    """

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    epsilon: float = 0.0
    penalty: float = 1.0
    tol_outer: float = 1e-8
    tol_inner: float = 1e-8
    max_outer: int = 2000
    max_inner: int = 100
    step: StepSearchConfig = field(default_factory=StepSearchConfig)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "epsilon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")
        if self.tol_outer <= 0 or self.tol_inner <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")

    def replace(self, **changes) -> "SolverConfig":
        data = asdict(self)
        step = data.pop("step")
        data["step"] = StepSearchConfig(**step)
        data.update(changes)
        return SolverConfig(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        data = dict(data)
        step = data.pop("step", None)
        known = {
            "alpha", "beta", "gamma", "epsilon", "penalty",
            "tol_outer", "tol_inner", "max_outer", "max_inner",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        if step is not None:
            step_known = {"t0", "rho", "c", "max_halvings"}
            step_unknown = set(step) - step_known
            if step_unknown:
                raise ValueError(f"unknown step config keys: {sorted(step_unknown)}")
            data["step"] = StepSearchConfig(**step)
        return cls(**data)


@dataclass
class RecoveryResult:
    """Output of a recovery solver.

    x is the recovered signal (vector or matrix matching the input),
    outliers/noise the sparse and dense error estimates where the solver
    separates them, aux holds ADMM internals (duplicate variable, residual
    slack, multipliers). The objective trace has one entry per iteration.
    """

    x: np.ndarray
    outliers: np.ndarray | None = None
    noise: np.ndarray | None = None
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    converged: bool = False
    meta: dict[str, Any] = field(default_factory=dict)


def _blas_threads() -> int | None:
    try:
        from threadpoolctl import threadpool_info
    except ImportError:
        return None
    sizes = [entry.get("num_threads") for entry in threadpool_info()]
    sizes = [s for s in sizes if s]
    return max(sizes) if sizes else None


def _as_matrix(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim == 2:
        return arr, False
    raise DimensionMismatch(f"signal must be 1-d or 2-d, got {arr.ndim}-d")


def _matrix_mask(mask, shape: tuple[int, int], was_vector: bool) -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype != np.bool_:
        raise DimensionMismatch("mask must be a boolean array")
    if was_vector and m.ndim == 1:
        m = m[:, None]
    if m.shape != shape:
        raise DimensionMismatch(f"mask shape {m.shape} != signal shape {shape}")
    if not m.any():
        raise EmptyAccessibleSet("mask marks no entry as accessible")
    return m


def _vector_inputs(t, mask, shift: GraphShift) -> tuple[np.ndarray, np.ndarray]:
    _require_normalized(shift)
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.shape[0] != shift.n:
        raise DimensionMismatch(
            f"expected vector of length {shift.n}, got shape {t.shape}"
        )
    m = np.asarray(mask)
    if m.dtype != np.bool_ or m.shape != t.shape:
        raise DimensionMismatch("mask must be a boolean array matching the signal")
    if not m.any():
        raise EmptyAccessibleSet("mask marks no entry as accessible")
    return t, m


def _nuclear_norm(X: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(X, compute_uv=False)))


def _variation(X: np.ndarray, A: np.ndarray) -> float:
    d = X - A @ X
    return float(np.sum(d * d))


def _variation_grad(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    # gradient of ||X - A X||_F^2: 2 (I - A)^T (I - A) X
    d = X - A @ X
    return 2.0 * (d - A.T @ d)


# ---------------------------------------------------------------------------
# closed-form inpainting
# ---------------------------------------------------------------------------

def gtvm(t: np.ndarray, mask: np.ndarray, shift: GraphShift) -> RecoveryResult:
    """Noiseless graph signal inpainting.

    Keeps the measured values and fills the hidden nodes with the unique
    minimum-variation extension: minimize ``||x - A x||_2^2`` subject to
    ``x_M = t_M``.
    """
    from .prox import regularized_solve

    t, m = _vector_inputs(t, mask, shift)
    at = tilde_shift(shift)
    x = np.where(m, t, 0.0)
    hidden = np.flatnonzero(~m)
    if hidden.size:
        acc = np.flatnonzero(m)
        at_uu = at[np.ix_(hidden, hidden)]
        at_um = at[np.ix_(hidden, acc)]
        x[hidden] = -regularized_solve(at_uu, at_um @ t[acc], mode="pseudo")
    obj = _variation(x[:, None], shift.weights)
    return RecoveryResult(
        x=x,
        objective_trace=np.array([obj]),
        iterations=1,
        converged=True,
        meta={"solver": "gtvm", "blas_threads": _blas_threads()},
    )


def gtvr(t: np.ndarray, mask: np.ndarray, shift: GraphShift, alpha: float) -> RecoveryResult:
    """Noisy graph signal inpainting.

    Minimizes ``||(x - t)_M||_2^2 + alpha * ||x - A x||_2^2`` in closed form
    through a pseudo-inverse solve.
    """
    from .prox import regularized_solve

    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    t, m = _vector_inputs(t, mask, shift)
    at = tilde_shift(shift)
    h = np.diag(m.astype(float)) + alpha * at
    x = regularized_solve(h, np.where(m, t, 0.0), mode="pseudo")
    r = (x - t)[m]
    obj = float(r @ r) + alpha * _variation(x[:, None], shift.weights)
    return RecoveryResult(
        x=x,
        objective_trace=np.array([obj]),
        iterations=1,
        converged=True,
        meta={"solver": "gtvr", "alpha": alpha, "blas_threads": _blas_threads()},
    )


# ---------------------------------------------------------------------------
# matrix completion by proximal gradient
# ---------------------------------------------------------------------------

def gmcm(T: np.ndarray, mask: np.ndarray, shift: GraphShift,
         config: SolverConfig | None = None) -> RecoveryResult:
    """Graph-regularized matrix completion with measured entries pinned.

    Minimizes ``||X - A X||_F^2 + beta * ||X||_*`` subject to ``X_M = T_M``
    by projected proximal gradient: a variation gradient step, singular value
    thresholding, then re-pinning the measured entries. The step is halved
    until the objective does not increase.
    """
    config = config or SolverConfig()
    _require_normalized(shift)
    T2, was_vec = _as_matrix(T)
    if T2.shape[0] != shift.n:
        raise DimensionMismatch(f"signal rows {T2.shape[0]} != nodes {shift.n}")
    m = _matrix_mask(mask, T2.shape, was_vec)
    A = shift.weights
    beta = config.beta

    def objective(Xc):
        val = _variation(Xc, A)
        if beta > 0:
            val += beta * _nuclear_norm(Xc)
        return val

    X = np.where(m, T2, 0.0)
    F = objective(X)
    trace = []
    t_step = config.step.t0
    converged = False
    it = 0
    for it in range(1, config.max_outer + 1):
        grad = _variation_grad(X, A)
        t_step = min(t_step / config.step.rho, config.step.t0)
        moved = False
        for _ in range(config.step.max_halvings + 1):
            cand = X - t_step * grad
            if beta > 0:
                cand = svt(cand, t_step * beta)
            cand = np.where(m, T2, cand)
            F_cand = objective(cand)
            if F_cand <= F:
                moved = True
                break
            t_step *= config.step.rho
        F_new = F_cand if moved else F
        if not np.isfinite(F_new):
            raise NonFiniteObjective(f"objective became {F_new} at iteration {it}")
        if moved:
            X = cand
        trace.append(F_new)
        if abs(F_new - F) < config.tol_outer:
            converged = True
            F = F_new
            break
        F = F_new
    return RecoveryResult(
        x=X[:, 0] if was_vec else X,
        objective_trace=np.array(trace),
        iterations=it,
        converged=converged,
        meta={"solver": "gmcm", "step": t_step, "blas_threads": _blas_threads()},
    )


def gmcr(T: np.ndarray, mask: np.ndarray, shift: GraphShift,
         config: SolverConfig | None = None) -> RecoveryResult:
    """Graph-regularized matrix completion with a least-squares data term.

    Minimizes ``||(X - T)_M||_F^2 + alpha * ||X - A X||_F^2 + beta * ||X||_*``
    by proximal gradient with backtracking on the smooth part (accept the step
    when the local quadratic model is an upper bound, which guarantees the
    composite objective never increases).
    """
    config = config or SolverConfig()
    _require_normalized(shift)
    T2, was_vec = _as_matrix(T)
    if T2.shape[0] != shift.n:
        raise DimensionMismatch(f"signal rows {T2.shape[0]} != nodes {shift.n}")
    m = _matrix_mask(mask, T2.shape, was_vec)
    A = shift.weights
    alpha, beta = config.alpha, config.beta

    def smooth(Xc):
        r = Xc[m] - T2[m]
        return float(r @ r) + alpha * _variation(Xc, A)

    def smooth_grad(Xc):
        g = np.zeros_like(Xc)
        g[m] = 2.0 * (Xc[m] - T2[m])
        return g + alpha * _variation_grad(Xc, A)

    X = np.where(m, T2, 0.0)
    f_val = smooth(X)
    F = f_val + (beta * _nuclear_norm(X) if beta > 0 else 0.0)
    trace = []
    t_step = config.step.t0
    converged = False
    it = 0
    for it in range(1, config.max_outer + 1):
        grad = smooth_grad(X)
        t_step = min(t_step / config.step.rho, config.step.t0)
        moved = False
        for _ in range(config.step.max_halvings + 1):
            cand = X - t_step * grad
            if beta > 0:
                cand = svt(cand, t_step * beta)
            diff = cand - X
            bound = f_val + float(np.sum(grad * diff)) \
                + float(np.sum(diff * diff)) / (2.0 * t_step)
            f_cand = smooth(cand)
            if f_cand <= bound:
                moved = True
                break
            t_step *= config.step.rho
        if moved:
            X = cand
            f_val = f_cand
            F_new = f_val + (beta * _nuclear_norm(X) if beta > 0 else 0.0)
        else:
            F_new = F
        if not np.isfinite(F_new):
            raise NonFiniteObjective(f"objective became {F_new} at iteration {it}")
        trace.append(F_new)
        if abs(F_new - F) < config.tol_outer:
            converged = True
            F = F_new
            break
        F = F_new
    return RecoveryResult(
        x=X[:, 0] if was_vec else X,
        objective_trace=np.array(trace),
        iterations=it,
        converged=converged,
        meta={"solver": "gmcr", "step": t_step, "blas_threads": _blas_threads()},
    )


# ---------------------------------------------------------------------------
# anomaly detection
# ---------------------------------------------------------------------------

def anomaly_detect(t: np.ndarray, shift: GraphShift, beta_reg: float,
                   config: SolverConfig | None = None,
                   e0: np.ndarray | None = None) -> RecoveryResult:
    """Sparse outlier detection on a fully observed signal.

    Minimizes ``||(t - e) - A (t - e)||_2^2 + beta_reg * ||e||_1`` over the
    outlier vector e by proximal gradient (soft threshold after a variation
    gradient step, backtracking on the smooth part). Returns the cleaned
    signal ``x = t - e`` and the outlier estimate. ``e0`` warm-starts the
    iteration; the default start is zero.
    """
    if beta_reg < 0:
        raise ValueError("beta_reg must be nonnegative")
    config = config or SolverConfig()
    _require_normalized(shift)
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.shape[0] != shift.n:
        raise DimensionMismatch(
            f"expected vector of length {shift.n}, got shape {t.shape}"
        )
    A = shift.weights

    def smooth(ec):
        d = (t - ec)[:, None]
        return _variation(d, A)

    def smooth_grad(ec):
        d = (t - ec)[:, None]
        return -_variation_grad(d, A)[:, 0]

    if e0 is None:
        e = np.zeros_like(t)
    else:
        e = np.asarray(e0, dtype=float).copy()
        if e.shape != t.shape:
            raise DimensionMismatch(
                f"warm start shape {e.shape} does not match signal {t.shape}"
            )
    f_val = smooth(e)
    F = f_val + beta_reg * float(np.sum(np.abs(e)))
    trace = []
    t_step = config.step.t0
    converged = False
    it = 0
    for it in range(1, config.max_outer + 1):
        grad = smooth_grad(e)
        t_step = min(t_step / config.step.rho, config.step.t0)
        moved = False
        for _ in range(config.step.max_halvings + 1):
            cand = shrink(e - t_step * grad, t_step * beta_reg)
            diff = cand - e
            bound = f_val + float(grad @ diff) + float(diff @ diff) / (2.0 * t_step)
            f_cand = smooth(cand)
            if f_cand <= bound:
                moved = True
                break
            t_step *= config.step.rho
        if moved:
            e = cand
            f_val = f_cand
            F_new = f_val + beta_reg * float(np.sum(np.abs(e)))
        else:
            F_new = F
        if not np.isfinite(F_new):
            raise NonFiniteObjective(f"objective became {F_new} at iteration {it}")
        trace.append(F_new)
        if abs(F_new - F) < config.tol_outer:
            # converged means a genuine fixed point of the prox map, not just
            # a plateau of the objective
            fp_now = e - shrink(e - t_step * smooth_grad(e), t_step * beta_reg)
            if float(np.max(np.abs(fp_now))) <= 1e-6:
                converged = True
                F = F_new
                break
        F = F_new
    fp = e - shrink(e - t_step * smooth_grad(e), t_step * beta_reg)
    return RecoveryResult(
        x=t - e,
        outliers=e,
        objective_trace=np.array(trace),
        iterations=it,
        converged=converged,
        meta={
            "solver": "anomaly_detect",
            "beta_reg": beta_reg,
            "step": t_step,
            "fixed_point_residual": float(np.max(np.abs(fp))) if fp.size else 0.0,
            "blas_threads": _blas_threads(),
        },
    )


def _l1_polish_along(e: np.ndarray, basis: np.ndarray, passes: int = 4) -> np.ndarray:
    """Exact l1 minimization of ``e + basis @ c`` one direction at a time.

    Along each direction the l1 norm is piecewise linear in the coefficient,
    so the optimum sits at a breakpoint where one entry crosses zero; those
    are enumerated directly. Multiple directions are handled by cyclic
    passes, which never increase the norm.
    """
    if basis.size == 0:
        return e
    e = e.copy()
    for _ in range(passes):
        improved = False
        for j in range(basis.shape[1]):
            v = basis[:, j]
            nz = np.abs(v) > 1e-14
            if not np.any(nz):
                continue
            candidates = -e[nz] / v[nz]
            costs = np.abs(e[None, :] + candidates[:, None] * v[None, :]).sum(axis=1)
            k = int(np.argmin(costs))
            current = float(np.abs(e).sum())
            if costs[k] < current - 1e-15 * (1.0 + current):
                e = e + candidates[k] * v
                improved = True
        if not improved:
            break
    return e


def anomaly_detect_constrained(t: np.ndarray, shift: GraphShift, eta_smooth: float,
                               config: SolverConfig | None = None,
                               max_bisect: int = 40) -> RecoveryResult:
    """Outlier detection under an explicit smoothness cap.

    Finds the critical l1 weight by bisection so the cleaned signal satisfies
    ``||x - A x||_2^2 <= eta_smooth^2`` (with 1e-6 relative slack) while the
    outlier estimate stays as small as possible, then returns the solution at
    that weight. Each penalized solve is polished by an exact l1 line search
    over the variation-free subspace (directions the cap cannot see), which
    removes the slow drift the plain proximal iteration suffers there. Raises
    :class:`Infeasible` when no weight in the search range satisfies the cap.

    ``converged`` certifies the constrained problem: the returned point meets
    the cap and is stationary for the final weight (up to variation-free
    directions, which the polish handles exactly).
    """
    if eta_smooth < 0:
        raise ValueError("eta_smooth must be nonnegative")
    config = config or SolverConfig()
    _require_normalized(shift)
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.shape[0] != shift.n:
        raise DimensionMismatch(
            f"expected vector of length {shift.n}, got shape {t.shape}"
        )
    target = eta_smooth ** 2
    base_variation = _variation(t[:, None], shift.weights)
    slack = target * 1e-6 + 1e-9 * (1.0 + base_variation)

    def feasible(value: float) -> bool:
        return value <= target + slack

    if feasible(base_variation):
        return RecoveryResult(
            x=t.copy(),
            outliers=np.zeros_like(t),
            objective_trace=np.array([0.0]),
            iterations=1,
            converged=True,
            meta={
                "solver": "anomaly_detect_constrained",
                "beta_reg": float("inf"),
                "smoothness": base_variation,
                "target": target,
                "bisections": 0,
            },
        )

    at = tilde_shift(shift)
    eigvals, eigvecs = np.linalg.eigh(at)
    null_basis = eigvecs[:, eigvals <= 1e-12 * max(eigvals[-1], 1.0)]
    lipschitz = 2.0 * max(float(eigvals[-1]), 0.0)

    def solve_at(beta: float) -> RecoveryResult:
        # alternate the penalized solve with the exact subspace polish; the
        # polish jumps over the flat directions, the re-solve cleans up the
        # rest from that much better starting point
        warm = None
        traces = []
        iterations = 0
        sol = None
        for _ in range(3):
            sol = anomaly_detect(t, shift, beta, config, e0=warm)
            traces.append(sol.objective_trace)
            iterations += sol.iterations
            polished = _l1_polish_along(sol.outliers, null_basis)
            if np.array_equal(polished, sol.outliers):
                break
            x = t - polished
            objective = (_variation(x[:, None], shift.weights)
                         + beta * float(np.abs(polished).sum()))
            traces.append(np.array([objective]))
            iterations += 1
            sol = RecoveryResult(
                x=x,
                outliers=polished,
                objective_trace=sol.objective_trace,
                iterations=sol.iterations,
                converged=sol.converged,
                meta=dict(sol.meta, polished=True),
            )
            warm = polished
        return RecoveryResult(
            x=sol.x,
            outliers=sol.outliers,
            objective_trace=np.concatenate(traces),
            iterations=iterations,
            converged=sol.converged,
            meta=sol.meta,
        )

    beta_hi = 1.001 * 2.0 * float(np.max(np.abs(at @ t)))
    if beta_hi <= 0:
        beta_hi = 1.0
    best = None
    beta_lo = beta_hi
    for _ in range(80):
        beta_lo *= 0.5
        sol = solve_at(beta_lo)
        if feasible(_variation(sol.x[:, None], shift.weights)):
            best = (beta_lo, sol)
            break
    if best is None:
        raise Infeasible(
            f"no l1 weight down to {beta_lo:.3e} meets the smoothness cap "
            f"{target:.3e}"
        )
    lo, hi = best[0], beta_hi
    steps = 0
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        sol = solve_at(mid)
        steps += 1
        if feasible(_variation(sol.x[:, None], shift.weights)):
            lo = mid
            best = (mid, sol)
        else:
            hi = mid
    beta_star, sol = best

    # stationarity certificate at the returned point, ignoring displacement
    # along the variation-free subspace the polish already optimized
    e = sol.outliers
    step_fp = 1.0 / max(lipschitz, 1e-12)
    grad = -2.0 * (at @ (t - e))
    disp = e - shrink(e - step_fp * grad, step_fp * beta_star)
    if null_basis.size:
        disp = disp - null_basis @ (null_basis.T @ disp)
    stationarity = float(np.max(np.abs(disp))) if disp.size else 0.0
    stationary = stationarity <= 1e-6 * (1.0 + float(np.max(np.abs(e))))
    result = RecoveryResult(
        x=sol.x,
        outliers=sol.outliers,
        objective_trace=sol.objective_trace,
        iterations=sol.iterations,
        converged=sol.converged or stationary,
        meta=dict(
            sol.meta,
            solver="anomaly_detect_constrained",
            beta_reg=beta_star,
            smoothness=_variation(sol.x[:, None], shift.weights),
            target=target,
            bisections=steps,
            stationarity=stationarity,
        ),
    )
    return result


# ---------------------------------------------------------------------------
# ADMM solvers
# ---------------------------------------------------------------------------

def _nuclear_block(X, P, Q, beta, eta, tol, max_inner):
    """Minimize ``beta ||X||_* + eta/2 (||X-P||^2 + ||X-Q||^2)``.

    Proximal gradient at the exact inverse-Lipschitz step 1/(2 eta); the
    update is independent of the current point, so the loop lands on the block
    minimizer immediately and the remaining passes only certify stationarity.
    """
    R = 0.5 * (P + Q)

    def phi(Xc):
        val = 0.5 * eta * (float(np.sum((Xc - P) ** 2)) + float(np.sum((Xc - Q) ** 2)))
        if beta > 0:
            val += beta * _nuclear_norm(Xc)
        return val

    val = phi(X)
    for _ in range(max_inner):
        X = svt(R, beta / (2.0 * eta)) if beta > 0 else R
        new = phi(X)
        if abs(new - val) < tol:
            break
        val = new
    return X


def _l1_block(E, S, gamma, eta, tol, max_inner):
    """Minimize ``gamma ||E||_1 + eta/2 ||E - S||^2`` (one-step soft threshold)."""

    def psi(Ec):
        return gamma * float(np.sum(np.abs(Ec))) \
            + 0.5 * eta * float(np.sum((Ec - S) ** 2))

    val = psi(E)
    for _ in range(max_inner):
        E = shrink(S, gamma / eta)
        new = psi(E)
        if abs(new - val) < tol:
            break
        val = new
    return E


def gsr_admm(T: np.ndarray, mask: np.ndarray, shift: GraphShift,
             config: SolverConfig | None = None) -> RecoveryResult:
    """General recovery: smooth + low-rank signal, sparse outliers, noise.

    Minimizes ``alpha ||X - A X||_F^2 + beta ||X||_* + gamma ||E||_1`` plus a
    quadratic noise term, subject to the measurements splitting as
    ``T = X + noise + E + slack`` with the slack supported off the accessible
    set. Solved by ADMM with a duplicate smoothness variable; with gamma = 0
    the outlier variable is dropped from the model (held at zero).

    Specializations: one column with beta = gamma = 0 reproduces :func:`gtvr`;
    alpha = 0 with gamma = 0 is nuclear-norm completion; one column with
    beta = 0 and a full mask is robust denoising.
    """
    config = config or SolverConfig()
    _require_normalized(shift)
    T2, was_vec = _as_matrix(T)
    if T2.shape[0] != shift.n:
        raise DimensionMismatch(f"signal rows {T2.shape[0]} != nodes {shift.n}")
    m = _matrix_mask(mask, T2.shape, was_vec)
    A = shift.weights
    alpha, beta, gamma, eta = config.alpha, config.beta, config.gamma, config.penalty
    at = tilde_shift(shift)
    factor = cho_factor(np.eye(shift.n) + (2.0 * alpha / eta) * at)

    X = np.where(m, T2, 0.0)
    W = np.zeros_like(T2)
    E = np.zeros_like(T2)
    Z = np.zeros_like(T2)
    C = np.zeros_like(T2)
    Y1 = np.zeros_like(T2)
    Y2 = np.zeros_like(T2)

    def objective(Xc, Ec):
        val = alpha * _variation(Xc, A)
        if beta > 0:
            val += beta * _nuclear_norm(Xc)
        if gamma > 0:
            val += gamma * float(np.sum(np.abs(Ec)))
        return val

    F = objective(X, E)
    t_norm = float(np.linalg.norm(T2))
    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_outer + 1):
        P = T2 - W - E - C - Y1 / eta
        Q = Z + Y2 / eta
        X = _nuclear_block(X, P, Q, beta, eta, config.tol_inner, config.max_inner)
        W = (eta / (eta + 2.0)) * (T2 - X - E - C - Y1 / eta)
        if gamma > 0:
            E = _l1_block(E, T2 - X - W - C - Y1 / eta, gamma, eta,
                          config.tol_inner, config.max_inner)
        Z = cho_solve(factor, X - Y2 / eta)
        C = np.where(m, 0.0, T2 - X - W - E - Y1 / eta)
        Y1 = Y1 - eta * (T2 - X - W - E - C)
        Y2 = Y2 - eta * (X - Z)
        F_new = objective(X, E)
        if not np.isfinite(F_new):
            raise NonFiniteObjective(f"objective became {F_new} at iteration {it}")
        trace.append(F_new)
        feasible = (
            np.linalg.norm(T2 - X - W - E - C) <= FEAS_RTOL * (1.0 + t_norm)
            and np.linalg.norm(X - Z) <= FEAS_RTOL * (1.0 + np.linalg.norm(X))
        )
        if abs(F_new - F) < config.tol_outer and feasible:
            converged = True
            F = F_new
            break
        F = F_new

    def out(arr):
        return arr[:, 0] if was_vec else arr

    return RecoveryResult(
        x=out(X),
        outliers=out(E),
        noise=out(W),
        aux={"duplicate": out(Z), "slack": out(C),
             "multiplier_split": out(Y1), "multiplier_duplicate": out(Y2)},
        objective_trace=np.array(trace),
        iterations=it,
        converged=converged,
        meta={"solver": "gsr_admm", "penalty": eta, "blas_threads": _blas_threads()},
    )


def rgtvr(t: np.ndarray, mask: np.ndarray, shift: GraphShift,
          config: SolverConfig | None = None) -> RecoveryResult:
    """Inpainting robust to sparse corruption of the measured values.

    Minimizes ``||(t - x - e)_M||_2^2 + alpha ||x - A x||_2^2 + gamma ||e||_1``
    by ADMM, separating the signal x from a sparse measurement-error vector e.
    With gamma = 0 the outlier variable is dropped and the solution matches
    :func:`gtvr`.
    """
    config = config or SolverConfig()
    t, m = _vector_inputs(t, mask, shift)
    A = shift.weights
    alpha, gamma, eta = config.alpha, config.gamma, config.penalty
    at = tilde_shift(shift)
    factor = cho_factor(np.eye(shift.n) + (2.0 * alpha / eta) * at)

    x = np.where(m, t, 0.0)
    w = np.zeros_like(t)
    e = np.zeros_like(t)
    c = np.zeros_like(t)
    lam = np.zeros_like(t)

    def objective(xc, ec):
        r = (t - xc - ec)[m]
        val = float(r @ r) + alpha * _variation(xc[:, None], A)
        if gamma > 0:
            val += gamma * float(np.sum(np.abs(ec)))
        return val

    F = objective(x, e)
    t_norm = float(np.linalg.norm(t))
    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_outer + 1):
        x = cho_solve(factor, t - e - w - c - lam / eta)
        w = (eta / (eta + 2.0)) * (t - x - e - c - lam / eta)
        if gamma > 0:
            e = shrink(t - x - w - c - lam / eta, gamma / eta)
        lam = lam - eta * (t - x - e - w - c)
        c = np.where(m, 0.0, t - x - w - e - lam / eta)
        F_new = objective(x, e)
        if not np.isfinite(F_new):
            raise NonFiniteObjective(f"objective became {F_new} at iteration {it}")
        trace.append(F_new)
        feasible = np.linalg.norm(t - x - w - e - c) <= FEAS_RTOL * (1.0 + t_norm)
        if abs(F_new - F) < config.tol_outer and feasible:
            converged = True
            F = F_new
            break
        F = F_new
    return RecoveryResult(
        x=x,
        outliers=e,
        noise=w,
        aux={"slack": c, "multiplier": lam},
        objective_trace=np.array(trace),
        iterations=it,
        converged=converged,
        meta={"solver": "rgtvr", "penalty": eta, "blas_threads": _blas_threads()},
    )
