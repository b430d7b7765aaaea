"""Distributionally robust minimum mean square error estimation.

The worst-case MMSE over a ball of covariance matrices maximizes the
concave Schur-complement objective

    f(S) = Tr[S_xx - S_xy S_yy^{-1} S_yx]

over covariances S within a moment (Gelbrich) distance eps of the nominal
covariance.  A Frank-Wolfe scheme solves it: each step maximizes the
linearized objective Tr[grad . D] over the ball, which has the closed form

    D = gamma^2 (gamma I - grad)^{-1} Sigma (gamma I - grad)^{-1}

with gamma solving Tr[Sigma (I - gamma (gamma I - grad)^{-1})^2] = eps^2,
and blends it in with step size 2/(k+2).  The final affine estimator reads
x(y) = A (y - mean_y) + mean_x with A = S_xy S_yy^{-1} at the best iterate.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from ._validation import as_matrix, as_vector, check_psd, check_symmetric
from .errors import NumericalFailure, SingularBlock
from .numerics import DEFAULT_TOL, Tolerance, bisect_root, sym_eig
from .transport import MomentPair, gelbrich_distance

__all__ = [
    "JointMoments",
    "FWState",
    "AffineEstimator",
    "FWDirection",
    "FWSolveResult",
    "mmse_objective",
    "mmse_gradient",
    "fw_direction",
    "fw_solve",
    "RobustMMSE",
]


@dataclasses.dataclass(frozen=True, eq=False)
class JointMoments:
    """Joint mean and covariance of a signal/observation pair (x, y)."""

    mx: int
    my: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        cov = check_psd(as_matrix(self.cov, "cov"), tol=1e-9, name="cov")
        if mean.size != self.mx + self.my or cov.shape[0] != mean.size:
            raise ValueError("mean/cov sizes must match mx + my")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def mean_x(self) -> np.ndarray:
        return self.mean[: self.mx]

    @property
    def mean_y(self) -> np.ndarray:
        return self.mean[self.mx :]


@dataclasses.dataclass(frozen=True, eq=False)
class FWState:
    """Snapshot of one Frank-Wolfe iteration."""

    S: np.ndarray
    k: int
    value: float
    gap: float


@dataclasses.dataclass(frozen=True, eq=False)
class AffineEstimator:
    """Affine map y -> gain @ y + offset."""

    gain: np.ndarray
    offset: np.ndarray

    def predict(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self.gain @ y + self.offset
        return y @ self.gain.T + self.offset


class FWDirection(NamedTuple):
    D: np.ndarray
    gamma_star: float
    repaired: bool
    trace_residual: float


class FWSolveResult(NamedTuple):
    S: np.ndarray
    estimator: AffineEstimator
    gaps: list
    states: list
    regularization: float


def _split(S: np.ndarray, mx: int):
    return S[:mx, :mx], S[:mx, mx:], S[mx:, mx:]


def _yy_solve(S_yy: np.ndarray, rhs: np.ndarray, tol: Tolerance) -> np.ndarray:
    w = np.linalg.eigvalsh(S_yy)
    if w.min() <= 1e-12 * (1.0 + abs(w).max()):
        raise SingularBlock("observation block S_yy is numerically singular")
    return np.linalg.solve(S_yy, rhs)


def mmse_objective(S, mx: int, tol: Tolerance = DEFAULT_TOL) -> float:
    """Schur-complement trace Tr[S_xx - S_xy S_yy^{-1} S_yx]; concave in S."""
    S = check_symmetric(as_matrix(S, "S"), tol=1e-8, name="S")
    S_xx, S_xy, S_yy = _split(S, mx)
    sol = _yy_solve(S_yy, S_xy.T, tol)
    return float(np.trace(S_xx) - np.sum(S_xy * sol.T))


def mmse_gradient(S, mx: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Gradient of the Schur-complement trace in the symmetric pairing.

    With G = S_xy S_yy^{-1}, the blocks are [[I, -G], [-G', G'G]]; the
    matrix is symmetric positive semidefinite.
    """
    S = check_symmetric(as_matrix(S, "S"), tol=1e-8, name="S")
    _, S_xy, S_yy = _split(S, mx)
    G = _yy_solve(S_yy, S_xy.T, tol).T
    grad = np.empty_like(S)
    grad[:mx, :mx] = np.eye(mx)
    grad[:mx, mx:] = -G
    grad[mx:, :mx] = -G.T
    grad[mx:, mx:] = G.T @ G
    return 0.5 * (grad + grad.T)


def _cov_distance_sq(a: np.ndarray, b: np.ndarray) -> float:
    m = a.shape[0]
    return gelbrich_distance(MomentPair(np.zeros(m), a), MomentPair(np.zeros(m), b)) ** 2


def fw_direction(
    grad, nominal_cov, eps: float, tol: Tolerance = DEFAULT_TOL
) -> FWDirection:
    """Maximize Tr[grad . D] over covariances within eps of the nominal.

    Returns the closed-form maximizer, the scalar multiplier, a flag set
    when the eigenvalue floor lam_min(nominal) had to be restored by
    blending toward the nominal, and the residual of the trace constraint.
    """
    grad = check_symmetric(as_matrix(grad, "grad"), tol=1e-8, name="grad")
    sigma = check_psd(as_matrix(nominal_cov, "nominal_cov"), tol=1e-9, name="nominal_cov")
    if not eps > 0:
        raise ValueError("eps must be positive")
    m = sigma.shape[0]
    scale = np.abs(grad).max(initial=0.0)
    if scale <= 1e-14:
        return FWDirection(sigma.copy(), math.inf, False, 0.0)

    dec = sym_eig(grad, tol=tol)
    g, V = dec.values, dec.vectors
    S_t = V.T @ sigma @ V
    s_diag = np.clip(np.diag(S_t), 0.0, None)
    numer = g**2 * s_diag
    g_max = float(g[0])

    def lhs(x: float) -> float:
        return float(np.sum(numer / (x - g) ** 2))

    lam_floor = float(np.linalg.eigvalsh(sigma).min())
    if g_max <= 0.0 and lhs(0.0) <= eps**2:
        # the ball is large enough to reach the unconstrained maximizer D = 0
        D = np.zeros_like(sigma)
        resid = max(0.0, _cov_distance_sq(sigma, D) - eps**2)
        return _repair_floor(D, sigma, lam_floor, 0.0, resid)

    g_lo = max(g_max, 0.0) + 1e-12 * (1.0 + abs(g_max))
    s_tot = float(np.sum(numer))
    g_hi = g_lo + math.sqrt(max(s_tot, 0.0)) / eps + 1.0
    probes = np.linspace(g_lo + 1e-9 * (1.0 + g_lo), g_hi, 4)
    vals = [lhs(x) for x in probes]
    if any(a < b - 1e-9 for a, b in zip(vals, vals[1:])):
        raise NumericalFailure("trace constraint is not decreasing in the multiplier")
    gamma = bisect_root(lambda x: lhs(x) - eps**2, (g_lo, g_hi), tol=tol, expand="none")

    factor = gamma / (gamma - g)
    D = V @ (S_t * factor[:, None] * factor[None, :]) @ V.T
    D = 0.5 * (D + D.T)
    resid = abs(_cov_distance_sq(sigma, D) - eps**2)
    return _repair_floor(D, sigma, lam_floor, float(gamma), resid)


def _repair_floor(
    D: np.ndarray, sigma: np.ndarray, lam_floor: float, gamma: float, resid: float
) -> FWDirection:
    slack = 1e-9 * (1.0 + abs(lam_floor))
    if float(np.linalg.eigvalsh(D).min()) >= lam_floor - slack:
        return FWDirection(D, gamma, False, resid)
    # blend toward the nominal (ball center) until the floor holds; the ball
    # is convex so feasibility of the trace constraint is preserved
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = (1.0 - mid) * D + mid * sigma
        if float(np.linalg.eigvalsh(cand).min()) >= lam_floor - slack:
            hi = mid
        else:
            lo = mid
    repaired = (1.0 - hi) * D + hi * sigma
    resid = abs(_cov_distance_sq(sigma, repaired))  # no longer on the boundary
    return FWDirection(repaired, gamma, True, resid)


def fw_solve(
    nominal: JointMoments,
    eps: float,
    iters: int = 500,
    tol: Tolerance = DEFAULT_TOL,
) -> FWSolveResult:
    """Frank-Wolfe maximization of the worst-case MMSE over the ball.

    Starts from the nominal covariance, keeps every iterate feasible, and
    extracts the affine estimator from the best iterate seen.  Per-step
    linearization gaps certify f* - f(S_k) <= gap_k.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if iters < 1:
        raise ValueError("need at least one iteration")
    cov = nominal.cov.copy()
    m = cov.shape[0]
    regularization = 0.0
    w = np.linalg.eigvalsh(cov)
    if w.min() <= 1e-12 * (1.0 + w.max()):
        regularization = 1e-10 * float(np.trace(cov)) / m
        if regularization <= 0.0:
            regularization = 1e-12
        cov = cov + regularization * np.eye(m)

    S = cov.copy()
    best_S, best_val = S.copy(), -math.inf
    states, gaps = [], []
    for k in range(iters):
        value = mmse_objective(S, nominal.mx, tol)
        grad = mmse_gradient(S, nominal.mx, tol)
        if eps == 0.0:
            direction = FWDirection(cov.copy(), math.inf, False, 0.0)
        else:
            direction = fw_direction(grad, cov, eps, tol)
        gap = float(np.sum(grad * (direction.D - S)))
        states.append(FWState(S=S.copy(), k=k, value=value, gap=gap))
        gaps.append(gap)
        if value > best_val:
            best_val, best_S = value, S.copy()
        if gap <= tol.abs_tol:
            break
        alpha = 2.0 / (k + 2.0)
        S = (1.0 - alpha) * S + alpha * direction.D
        S = 0.5 * (S + S.T)

    final_val = mmse_objective(S, nominal.mx, tol)
    if final_val > best_val:
        best_val, best_S = final_val, S.copy()

    _, S_xy, S_yy = _split(best_S, nominal.mx)
    gain = _yy_solve(S_yy, S_xy.T, tol).T
    offset = nominal.mean_x - gain @ nominal.mean_y
    estimator = AffineEstimator(gain=gain, offset=offset)
    return FWSolveResult(best_S, estimator, gaps, states, regularization)


class RobustMMSE:
    """Estimator-style wrapper fitting joint sample moments, then fw_solve."""

    def __init__(self, eps: float = 0.1, iters: int = 200):
        self.eps = eps
        self.iters = iters

    def get_params(self, deep: bool = True) -> dict:
        return {"eps": self.eps, "iters": self.iters}

    def set_params(self, **params) -> "RobustMMSE":
        for key, value in params.items():
            if key not in ("eps", "iters"):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, Y) -> "RobustMMSE":
        from .shrinkage import sample_moments

        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y must have the same number of rows")
        joint = sample_moments(np.hstack([X, Y]))
        moments = JointMoments(X.shape[1], Y.shape[1], joint.mu, joint.sigma)
        result = fw_solve(moments, self.eps, self.iters)
        self.estimator_ = result.estimator
        self.S_ = result.S
        self.gaps_ = result.gaps
        return self

    def predict(self, Y) -> np.ndarray:
        return self.estimator_.predict(Y)
