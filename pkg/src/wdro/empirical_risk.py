"""Worst-case expected loss over Wasserstein balls around discrete samples.

Two loss families are covered exactly at desk scale:

* piecewise-affine (max of affine pieces) losses, for type-1 and type-inf
  balls with whole-space or polyhedral support, plus the type-2 whole-space
  case through a scalar dual;
* indefinite quadratic losses ``xi' Q xi + 2 q' xi`` for type-2 balls with
  Euclidean norm and whole-space support, through an eigenvalue-based
  scalar dual.

Each worst-case value comes with a matching extremal construction: either
an attained discrete distribution inside the ball, or a one-parameter
family of distributions whose risk converges to the value while an atom
escapes to infinity.  Cheap Lipschitz upper bounds and perturbed-empirical
lower bounds sandwich the exact value.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ._validation import as_matrix, as_vector, check_symmetric
from .convex_analysis import (
    NormSpec,
    SetSpec,
    add_norm_le_rows,
    dual_norm_eval,
    norm_eval,
    norm_subgradient,
)
from .errors import (
    DimensionMismatch,
    NumericalFailure,
    Unbounded,
    UnsupportedCombination,
    UnsupportedSupport,
)
from .numerics import DEFAULT_TOL, Tolerance, bisect_root, sym_eig
from .simplex import LPBuilder, solve_lp
from .transport import DiscreteDistribution

__all__ = [
    "BallSpec",
    "PiecewiseAffineLoss",
    "QuadraticLoss",
    "EscapingAtom",
    "AsymptoticFamily",
    "ExtremalReport",
    "expected_loss",
    "wc_risk_pwa",
    "lipschitz_modulus_pwa",
    "lipschitz_upper_bound",
    "robust_lower_bound",
    "wc_risk_quadratic",
    "extremal_pwa",
    "extremal_quadratic",
]


@dataclasses.dataclass(frozen=True, eq=False)
class BallSpec:
    """Wasserstein ball: radius, order p in {1, 2, inf}, ground norm, support.

    ``support=None`` means the whole space.  Only whole-space and polyhedral
    supports are accepted; other set kinds raise UnsupportedSupport.
    """

    eps: float
    p: float
    norm: NormSpec = None
    support: Optional[SetSpec] = None

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("ball radius eps must be nonnegative")
        if self.p not in (1.0, 2.0, math.inf):
            raise ValueError("ball order p must be 1, 2 or inf")
        if self.norm is None:
            object.__setattr__(self, "norm", NormSpec.p_norm(2))
        if self.support is not None and self.support.kind not in ("whole", "polyhedron"):
            raise UnsupportedSupport(
                f"support kind {self.support.kind!r} is not supported; "
                "use the whole space or a polyhedron"
            )
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "p", float(self.p))

    def support_for(self, dim: int) -> SetSpec:
        if self.support is None:
            return SetSpec.whole(dim)
        if self.support.dim != dim:
            raise DimensionMismatch(
                f"support lives in dimension {self.support.dim}, samples in {dim}"
            )
        return self.support


class PiecewiseAffineLoss:
    """Loss xi -> max_j (a_j' xi + b_j) given as a list of (a_j, b_j) pieces."""

    def __init__(self, pieces: Sequence[Tuple]):
        pieces = list(pieces)
        if not pieces:
            raise ValueError("at least one affine piece is required")
        A = np.vstack([np.atleast_1d(np.asarray(a, dtype=float)) for a, _ in pieces])
        b = np.array([float(b) for _, b in pieces])
        self.A = A
        self.b = b

    @property
    def n_pieces(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def pieces(self):
        return [(self.A[j].copy(), float(self.b[j])) for j in range(self.n_pieces)]

    def piece_values(self, xi) -> np.ndarray:
        return self.A @ as_vector(xi, "xi") + self.b

    def value(self, xi) -> float:
        return float(np.max(self.piece_values(xi)))

    def piece_table(self, atoms: np.ndarray) -> np.ndarray:
        """Matrix L with L[i, j] = a_j' atom_i + b_j."""
        return atoms @ self.A.T + self.b


class QuadraticLoss:
    """Loss xi -> xi' Q xi + 2 q' xi with symmetric (possibly indefinite) Q.

    Note the factor of two on the linear term: the gradient is 2(Q xi + q).
    """

    def __init__(self, Q, q):
        self.Q = check_symmetric(as_matrix(Q, "Q"), tol=1e-10, name="Q")
        self.q = as_vector(q, "q")
        if self.Q.shape[0] != self.q.size:
            raise DimensionMismatch("Q and q dimensions differ")

    @property
    def dim(self) -> int:
        return self.q.size

    def value(self, xi) -> float:
        xi = as_vector(xi, "xi")
        return float(xi @ self.Q @ xi + 2.0 * self.q @ xi)


def expected_loss(loss, distribution: DiscreteDistribution) -> float:
    """Expected loss under a discrete distribution, summed in index order."""
    total = 0.0
    for x, w in zip(distribution.atoms, distribution.weights):
        total += float(w) * loss.value(x)
    return total


@dataclasses.dataclass(frozen=True, eq=False)
class EscapingAtom:
    """One atom of mass donor_unit/n escaping to infinity as n grows.

    position(n) = origin + radial(n) * direction, where radial grows like
    n ** rate_exponent; the mass is borrowed from the base atom ``donor``.
    """

    origin: np.ndarray
    direction: np.ndarray
    donor: int
    donor_unit: float
    rate_kind: str
    coef: float
    offset: float = 0.0

    @property
    def rate_exponent(self) -> float:
        return 1.0 if self.rate_kind == "linear" else 0.5

    def radial(self, n: float) -> float:
        if self.rate_kind == "linear":
            return self.coef * n
        return math.sqrt(self.offset**2 + self.coef * n) - self.offset

    def position(self, n: float) -> np.ndarray:
        return self.origin + self.radial(n) * self.direction

    def mass(self, n: float) -> float:
        return self.donor_unit / n


@dataclasses.dataclass(frozen=True, eq=False)
class AsymptoticFamily:
    """Family Q_n of in-ball distributions whose risk approaches the optimum."""

    base_atoms: np.ndarray
    base_weights: np.ndarray
    escapes: Tuple[EscapingAtom, ...]

    def distribution(self, n: int) -> DiscreteDistribution:
        weights = self.base_weights.astype(float).copy()
        atoms = [self.base_atoms]
        extra = []
        for esc in self.escapes:
            m = esc.mass(n)
            weights[esc.donor] -= m
            atoms.append(esc.position(n)[None, :])
            extra.append(m)
        if np.min(weights) < 0.0:
            raise ValueError(f"n={n} is too small: a donor atom would get negative mass")
        return DiscreteDistribution(np.vstack(atoms), np.concatenate([weights, extra]))


@dataclasses.dataclass(frozen=True, eq=False)
class ExtremalReport:
    """Worst-case distribution: attained exactly or as an escaping family."""

    kind: str
    certified_value: float
    distribution: Optional[DiscreteDistribution] = None
    family: Optional[AsymptoticFamily] = None


def _check_inputs(loss_dim: int, samples: DiscreteDistribution, ball: BallSpec) -> SetSpec:
    if samples.dim != loss_dim:
        raise DimensionMismatch(
            f"loss dimension {loss_dim} does not match sample dimension {samples.dim}"
        )
    support = ball.support_for(samples.dim)
    if support.kind == "polyhedron":
        for i, atom in enumerate(samples.atoms):
            if not support.contains(atom, tol=1e-9):
                raise ValueError(f"sample atom {i} lies outside the support set")
    return support


def lipschitz_modulus_pwa(loss: PiecewiseAffineLoss, norm: NormSpec) -> float:
    """Lipschitz constant of a max-affine loss: the largest dual piece norm."""
    return max(dual_norm_eval(norm, a) for a in loss.A)


def lipschitz_upper_bound(
    loss: PiecewiseAffineLoss, samples: DiscreteDistribution, ball: BallSpec
) -> float:
    """Nominal risk plus radius times Lipschitz modulus; bounds every ball order."""
    _check_inputs(loss.dim, samples, ball)
    L = loss.piece_table(samples.atoms)
    nominal = float(samples.weights @ L.max(axis=1))
    return nominal + ball.eps * lipschitz_modulus_pwa(loss, ball.norm)


def _wc_pwa_lp(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    support: SetSpec,
    tol: Tolerance,
) -> float:
    """Dual LP for type-1 / type-inf balls over polyhedral (or whole) support.

    Per sample i and piece j the inner conjugate reduces to

        s_i >= l_j(xi_i) + (d - C xi_i)' lam_ij            (+ eps*t_ij if p=inf)
        u_ij = a_j - C' lam_ij,   lam_ij >= 0,
        ||u_ij||_* <= gamma (p=1)   or   ||u_ij||_* <= t_ij (p=inf),

    minimizing gamma*eps + sum_i w_i s_i (p=1) or sum_i w_i s_i (p=inf).
    """
    dual = ball.norm.dual_spec()
    m = samples.dim
    if not dual.is_lp_representable(m):
        raise UnsupportedCombination(
            "the dual ground norm is not polyhedral; this ball/support "
            "combination has no LP reformulation"
        )
    if support.kind == "polyhedron":
        C = support.C_matrix()
        d = support.d_vector()
    else:
        C = np.zeros((0, m))
        d = np.zeros(0)
    n_rows = C.shape[0]
    L = loss.piece_table(samples.atoms)
    N, J = samples.n_atoms, loss.n_pieces

    builder = LPBuilder()
    s_idx = builder.add_vars(N, lo=None)
    for i in range(N):
        builder.set_cost(s_idx[i], float(samples.weights[i]))
    if ball.p == 1.0:
        gamma = builder.add_var(lo=0.0, cost=ball.eps)
    slack = d[None, :] - samples.atoms @ C.T  # (N, n_rows), nonnegative

    for i in range(N):
        for j in range(J):
            lam = builder.add_vars(n_rows, lo=0.0)
            u = builder.add_vars(m, lo=None)
            for k in range(m):
                coeffs = {int(u[k]): 1.0}
                for r in range(n_rows):
                    coeffs[int(lam[r])] = coeffs.get(int(lam[r]), 0.0) + C[r, k]
                builder.add_row(coeffs, "=", float(loss.A[j, k]))
            epi = {int(s_idx[i]): 1.0}
            for r in range(n_rows):
                epi[int(lam[r])] = -float(slack[i, r])
            if ball.p == 1.0:
                builder.add_row(epi, ">=", float(L[i, j]))
                add_norm_le_rows(builder, dual, u, gamma)
            else:
                t = builder.add_var(lo=0.0)
                epi[int(t)] = -ball.eps
                builder.add_row(epi, ">=", float(L[i, j]))
                add_norm_le_rows(builder, dual, u, t)

    sol = solve_lp(builder.build(), tol=tol)
    if sol.status == "infeasible":
        return math.inf
    if sol.status == "unbounded":
        warnings.warn(
            "worst-case risk LP is unbounded; reporting an infinite risk",
            RuntimeWarning,
        )
        return math.inf
    if sol.status != "optimal":
        raise NumericalFailure(f"worst-case LP terminated with status {sol.status}")
    return float(sol.objective)


def _wc_pwa_p2_whole(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    tol: Tolerance,
) -> float:
    """Scalar dual for the type-2 whole-space case.

    value = inf_{gamma > 0} gamma eps^2
            + sum_i w_i max_j [ l_j(xi_i) + ||a_j||_*^2 / (4 gamma) ].
    """
    L = loss.piece_table(samples.atoms)
    D = np.array([dual_norm_eval(ball.norm, a) ** 2 for a in loss.A])
    nominal = float(samples.weights @ L.max(axis=1))
    d_max = float(np.max(D))
    if d_max == 0.0:
        return nominal

    w = samples.weights

    def value_at(g: float) -> float:
        inner = L + D[None, :] / (4.0 * g)
        return g * ball.eps**2 + float(w @ inner.max(axis=1))

    def deriv(g: float) -> float:
        inner = L + D[None, :] / (4.0 * g)
        active = np.argmax(inner, axis=1)
        return ball.eps**2 - float(w @ D[active]) / (4.0 * g * g)

    center = math.sqrt(d_max) / (2.0 * ball.eps)
    lo, hi = center * 1e-9, center * 1e9 + 1.0
    if deriv(lo) >= 0.0:
        return value_at(lo)
    g_star = bisect_root(deriv, (lo, hi), tol=tol, expand="none")
    return value_at(g_star)


def wc_risk_pwa(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    tol: Tolerance = DEFAULT_TOL,
    method: str = "auto",
) -> float:
    """Exact worst-case expected max-affine loss over a Wasserstein ball.

    Whole-space supports use closed forms (type-1: nominal plus eps times
    the Lipschitz modulus; type-inf: per-sample sup; type-2: scalar dual).
    Polyhedral supports use the dual LP, which requires p in {1, inf} and a
    polyhedral dual ground norm.  ``method`` is one of "auto",
    "closed_form", "lp"; forcing "lp" on a whole-space instance runs the
    same LP with zero support rows, which is useful for cross-checks.
    Returns +inf when the dual LP certifies an infinite worst case.
    """
    support = _check_inputs(loss.dim, samples, ball)
    L = loss.piece_table(samples.atoms)
    nominal = float(samples.weights @ L.max(axis=1))
    if ball.eps == 0.0:
        return nominal

    if method not in ("auto", "closed_form", "lp"):
        raise ValueError(f"unknown method {method!r}")

    whole = support.kind == "whole"
    if not whole and ball.p == 2.0:
        raise UnsupportedCombination(
            "type-2 balls over a proper polyhedral support need a conic "
            "reformulation and are not supported"
        )
    if method == "closed_form" and not whole:
        raise ValueError("closed forms exist only for whole-space support")

    if whole and method in ("auto", "closed_form"):
        if ball.p == 1.0:
            return nominal + ball.eps * lipschitz_modulus_pwa(loss, ball.norm)
        if ball.p == math.inf:
            duals = np.array([dual_norm_eval(ball.norm, a) for a in loss.A])
            per_sample = (L + ball.eps * duals[None, :]).max(axis=1)
            return float(samples.weights @ per_sample)
        return _wc_pwa_p2_whole(loss, samples, ball, tol)

    if ball.p == 2.0:
        raise UnsupportedCombination("the type-2 case has no LP path")
    return _wc_pwa_lp(loss, samples, ball, support, tol)


def _coordinate_intervals(C, d, xi, k, cap):
    """Range of coordinate-k moves keeping xi + t e_k inside {C x <= d}."""
    t_lo, t_hi = -cap, cap
    if C.shape[0]:
        resid = d - C @ xi
        for r in range(C.shape[0]):
            c = C[r, k]
            if c > 1e-14:
                t_hi = min(t_hi, resid[r] / c)
            elif c < -1e-14:
                t_lo = max(t_lo, resid[r] / c)
    return min(t_lo, 0.0), max(t_hi, 0.0)


def robust_lower_bound(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Certified lower bound from perturbed N-point empirical distributions.

    Moves each sample inside the support under the shared transport budget
    sum_i w_i ||theta_i||^p <= eps^p.  A single affine piece on the whole
    space is solved in closed form (nominal + eps ||a||_*); otherwise each
    sample is improved by coordinatewise line search against a budget
    multiplier, with the multiplier found by bisection.  Every candidate is
    scaled back into the budget before evaluation, so the returned value is
    always feasible, hence a true lower bound on the worst-case risk.
    """
    support = _check_inputs(loss.dim, samples, ball)
    if not math.isfinite(ball.p):
        raise UnsupportedCombination("the perturbation bound needs a finite ball order")
    L = loss.piece_table(samples.atoms)
    nominal = float(samples.weights @ L.max(axis=1))
    if ball.eps == 0.0:
        return nominal

    if loss.n_pieces == 1 and support.kind == "whole":
        return nominal + ball.eps * dual_norm_eval(ball.norm, loss.A[0])

    if support.kind == "polyhedron":
        C, d = support.C_matrix(), support.d_vector()
    else:
        C, d = np.zeros((0, loss.dim)), np.zeros(0)

    N, m = samples.n_atoms, samples.dim
    w = samples.weights
    p, eps = ball.p, ball.eps
    target = eps**p
    unit_norms = np.array(
        [max(norm_eval(ball.norm, np.eye(m)[k]), 1e-12) for k in range(m)]
    )

    def ascend(gamma: float) -> np.ndarray:
        theta = np.zeros((N, m))
        for i in range(N):
            cap_i = 4.0 * (target / w[i]) ** (1.0 / p)
            for _ in range(2):
                for k in range(m):
                    base = samples.atoms[i] + theta[i]
                    t_lo, t_hi = _coordinate_intervals(
                        C, d, base, k, cap_i / unit_norms[k]
                    )
                    cands = set(np.linspace(t_lo, t_hi, 25).tolist())
                    cands.update([0.0, -theta[i, k]])
                    # piece-crossing points along the coordinate line
                    for j1 in range(loss.n_pieces):
                        for j2 in range(j1 + 1, loss.n_pieces):
                            da = loss.A[j1] - loss.A[j2]
                            if abs(da[k]) > 1e-12:
                                t = -(da @ base + loss.b[j1] - loss.b[j2]) / da[k]
                                if t_lo <= t <= t_hi:
                                    cands.add(float(t))
                    best_t, best_f = 0.0, -math.inf
                    for t in sorted(cands):
                        if not (t_lo - 1e-12 <= t <= t_hi + 1e-12):
                            continue
                        shift = theta[i].copy()
                        shift[k] += t
                        f = loss.value(samples.atoms[i] + shift) - gamma * norm_eval(
                            ball.norm, shift
                        ) ** p
                        if f > best_f + 1e-15:
                            best_t, best_f = t, f
                    theta[i, k] += best_t
        return theta

    def evaluate(theta: np.ndarray) -> float:
        budget = float(sum(w[i] * norm_eval(ball.norm, theta[i]) ** p for i in range(N)))
        scale = 1.0 if budget <= target else (target / budget) ** (1.0 / p)
        return float(
            sum(w[i] * loss.value(samples.atoms[i] + scale * theta[i]) for i in range(N))
        )

    lip = lipschitz_modulus_pwa(loss, ball.norm)
    best = nominal
    g_lo, g_hi = 0.0, 2.0 * lip + 1.0
    for _ in range(8):
        theta = ascend(g_hi)
        budget = float(sum(w[i] * norm_eval(ball.norm, theta[i]) ** p for i in range(N)))
        if budget <= target:
            break
        g_hi *= 4.0
    for _ in range(30):
        g_mid = 0.5 * (g_lo + g_hi)
        theta = ascend(g_mid)
        best = max(best, evaluate(theta))
        budget = float(sum(w[i] * norm_eval(ball.norm, theta[i]) ** p for i in range(N)))
        if budget > target:
            g_lo = g_mid
        else:
            g_hi = g_mid
    return best


class _QuadDual(NamedTuple):
    value: float
    gamma: float
    theta: np.ndarray
    alpha: float
    boundary: bool
    top_value: float
    top_vector: np.ndarray
    nominal: float


def _quad_scalar_dual(
    loss: QuadraticLoss, samples: DiscreteDistribution, eps: float, tol: Tolerance
) -> _QuadDual:
    """Minimize g(gamma) = nominal + gamma eps^2 + sum_i w_i sum_k c_ik^2/(gamma - lam_k)
    over gamma >= max(0, lam_max), where c_i = V' (q + Q xi_i).

    g'(gamma) = eps^2 - sum_i w_i ||theta_i(gamma)||^2 is increasing, so the
    minimizer is either an interior root of g' or the boundary.  At the
    boundary the top eigenspace is deflated; a nonzero component there makes
    g' diverge to -inf and forces an interior minimizer.
    """
    eig = sym_eig(loss.Q, tol=tol)
    lam, V = eig.values, eig.vectors
    atoms, w = samples.atoms, samples.weights
    nominal = float(
        np.einsum("ij,jk,ik->i", atoms, loss.Q, atoms) @ w + 2.0 * (atoms @ loss.q) @ w
    )
    Cmat = (loss.q[None, :] + atoms @ loss.Q) @ V  # rows c_i
    D = Cmat**2

    gamma_b = max(0.0, float(lam[0]))
    tau = 1e-12 * (1.0 + abs(float(lam[0])))
    null_mask = (gamma_b - lam) <= tau
    S_all = float(w @ D.sum(axis=1))
    mass = float(w @ D[:, null_mask].sum(axis=1)) if null_mask.any() else 0.0

    def deriv(g: float) -> float:
        denom = (g - lam) ** 2
        return eps**2 - float(w @ (D / denom).sum(axis=1))

    def deflated_deriv_limit() -> float:
        keep = ~null_mask
        if not keep.any():
            return eps**2
        denom = (gamma_b - lam[keep]) ** 2
        return eps**2 - float(w @ (D[:, keep] / denom).sum(axis=1))

    boundary = mass <= 1e-13 * (1.0 + S_all) and deflated_deriv_limit() >= 0.0
    if boundary:
        gamma = gamma_b
        keep = ~null_mask
        coords = np.zeros_like(Cmat)
        if keep.any():
            coords[:, keep] = Cmat[:, keep] / (gamma_b - lam[keep])
        theta = coords @ V.T
        tail = float(w @ (Cmat[:, keep] * coords[:, keep]).sum(axis=1)) if keep.any() else 0.0
        value = nominal + gamma * eps**2 + tail
    else:
        lo = gamma_b + max(tau * 10.0, 1e-300)
        while deriv(lo) >= 0.0 and lo > gamma_b:
            lo = gamma_b + (lo - gamma_b) * 0.1
            if lo - gamma_b < 1e-15 * (1.0 + gamma_b):
                break
        hi = gamma_b + math.sqrt(max(S_all, 0.0)) / eps + 1.0
        gamma = bisect_root(deriv, (lo, hi), tol=tol, expand="none")
        coords = Cmat / (gamma - lam)
        theta = coords @ V.T
        value = nominal + gamma * eps**2 + float(w @ (Cmat * coords).sum(axis=1))

    alpha = eps**2 - float(w @ (theta**2).sum(axis=1))
    return _QuadDual(
        value=value,
        gamma=gamma,
        theta=theta,
        alpha=alpha,
        boundary=boundary,
        top_value=float(lam[0]),
        top_vector=V[:, 0].copy(),
        nominal=nominal,
    )


def wc_risk_quadratic(
    loss: QuadraticLoss,
    samples: DiscreteDistribution,
    eps: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Worst-case quadratic loss over a type-2 Euclidean whole-space ball."""
    if samples.dim != loss.dim:
        raise DimensionMismatch(
            f"loss dimension {loss.dim} does not match sample dimension {samples.dim}"
        )
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return expected_loss(loss, samples)
    return _quad_scalar_dual(loss, samples, eps, tol).value


def extremal_quadratic(
    loss: QuadraticLoss,
    samples: DiscreteDistribution,
    eps: float,
    tol: Tolerance = DEFAULT_TOL,
) -> ExtremalReport:
    """Worst-case distribution for the quadratic case.

    Interior dual minimizer: every atom shifts to (gamma I - Q)^{-1}(q + gamma
    xi_i) and the optimum is attained.  Boundary minimizer with leftover
    budget alpha and a positive top eigenvalue: an atom escapes along the top
    eigenvector at rate sqrt(n), carrying the leftover second moment.
    """
    if samples.dim != loss.dim:
        raise DimensionMismatch(
            f"loss dimension {loss.dim} does not match sample dimension {samples.dim}"
        )
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return ExtremalReport(
            kind="attained",
            certified_value=expected_loss(loss, samples),
            distribution=DiscreteDistribution(samples.atoms.copy(), samples.weights.copy()),
        )
    dual = _quad_scalar_dual(loss, samples, eps, tol)
    shifted = samples.atoms + dual.theta
    weights = samples.weights.copy()
    needs_escape = (
        dual.boundary
        and dual.alpha > 1e-9 * (1.0 + eps**2)
        and dual.top_value > 1e-12 * (1.0 + abs(dual.top_value))
    )
    if not needs_escape:
        return ExtremalReport(
            kind="attained",
            certified_value=dual.value,
            distribution=DiscreteDistribution(shifted, weights),
        )
    v = dual.top_vector
    offset = float(dual.theta[0] @ v)
    escape = EscapingAtom(
        origin=shifted[0].copy(),
        direction=v,
        donor=0,
        donor_unit=float(weights[0]),
        rate_kind="sqrt",
        coef=dual.alpha / float(weights[0]),
        offset=offset,
    )
    family = AsymptoticFamily(base_atoms=shifted, base_weights=weights, escapes=(escape,))
    return ExtremalReport(kind="asymptotic", certified_value=dual.value, family=family)


def _extremal_pwa_lp(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    support: SetSpec,
    tol: Tolerance,
) -> ExtremalReport:
    """Primal mass-splitting LP for type-1 extremal distributions.

    Variables alpha_ij (mass of sample i routed to piece j) and theta_ij
    (aggregate shift of that mass), maximizing
    sum_ij w_i [alpha_ij l_j(xi_i) + a_j' theta_ij] subject to the mixture,
    support (perspective form C(xi_i alpha + theta) <= d alpha) and budget
    sum_ij w_i ||theta_ij|| <= eps rows.  Pairs with alpha = 0 but theta != 0
    are recession directions realized by escaping atoms.
    """
    N, J, m = samples.n_atoms, loss.n_pieces, samples.dim
    L = loss.piece_table(samples.atoms)
    if support.kind == "polyhedron":
        C, d = support.C_matrix(), support.d_vector()
    else:
        C, d = np.zeros((0, m)), np.zeros(0)

    builder = LPBuilder()
    alpha_idx = np.empty((N, J), dtype=int)
    theta_idx = np.empty((N, J, m), dtype=int)
    for i in range(N):
        for j in range(J):
            a_var = builder.add_var(lo=0.0, cost=-float(samples.weights[i] * L[i, j]))
            alpha_idx[i, j] = a_var
            th = builder.add_vars(m, lo=None)
            theta_idx[i, j] = th
            for k in range(m):
                builder.set_cost(int(th[k]), -float(samples.weights[i] * loss.A[j, k]))
        builder.add_row({int(alpha_idx[i, j]): 1.0 for j in range(J)}, "=", 1.0)

    t_idx = np.empty((N, J), dtype=int)
    for i in range(N):
        for j in range(J):
            t_idx[i, j] = builder.add_var(lo=0.0)
            add_norm_le_rows(builder, ball.norm, theta_idx[i, j], int(t_idx[i, j]))
            for r in range(C.shape[0]):
                coeffs = {int(theta_idx[i, j, k]): float(C[r, k]) for k in range(m)}
                coeffs[int(alpha_idx[i, j])] = float(C[r] @ samples.atoms[i] - d[r])
                builder.add_row(coeffs, "<=", 0.0)
    budget = {
        int(t_idx[i, j]): float(samples.weights[i]) for i in range(N) for j in range(J)
    }
    builder.add_row(budget, "<=", ball.eps)

    sol = solve_lp(builder.build(), tol=tol)
    if sol.status == "unbounded":
        raise Unbounded("worst-case risk is infinite; no extremal construction exists")
    if sol.status != "optimal":
        raise NumericalFailure(f"extremal LP terminated with status {sol.status}")
    value = -float(sol.objective)

    alpha = sol.x[alpha_idx]
    theta = sol.x[theta_idx]
    scale = 1.0 + float(np.max(np.abs(theta))) + ball.eps
    a_tol = 1e-9
    th_tol = 1e-9 * scale

    atoms, weights = [], []
    escapes = []
    donor_of_row = {}
    for i in range(N):
        for j in range(J):
            if alpha[i, j] > a_tol:
                atoms.append(samples.atoms[i] + theta[i, j] / alpha[i, j])
                weights.append(float(samples.weights[i] * alpha[i, j]))
                prev = donor_of_row.get(i)
                if prev is None or weights[prev] < weights[-1]:
                    donor_of_row[i] = len(weights) - 1
    for i in range(N):
        for j in range(J):
            if alpha[i, j] <= a_tol:
                r = float(np.linalg.norm(theta[i, j]))
                if r > th_tol:
                    # The atom carries exactly the LP budget w_i ||theta||
                    # at every n.  Capping the escaping mass at that budget
                    # shrinks the risk deficit (mass times the donor's gap
                    # to the escape piece) to O(budget/n).
                    budget = float(samples.weights[i]) * r
                    unit = min(float(samples.weights[i]), budget)
                    escapes.append(
                        EscapingAtom(
                            origin=samples.atoms[i].copy(),
                            direction=theta[i, j] / r,
                            donor=donor_of_row[i],
                            donor_unit=unit,
                            rate_kind="linear",
                            coef=budget / unit,
                        )
                    )

    base_atoms = np.vstack(atoms)
    base_weights = np.array(weights)
    base_weights = base_weights / base_weights.sum()
    if escapes:
        family = AsymptoticFamily(base_atoms, base_weights, tuple(escapes))
        return ExtremalReport(kind="asymptotic", certified_value=value, family=family)
    dist = DiscreteDistribution(base_atoms, base_weights).merged(1e-10)
    return ExtremalReport(kind="attained", certified_value=value, distribution=dist)


def extremal_pwa(
    loss: PiecewiseAffineLoss,
    samples: DiscreteDistribution,
    ball: BallSpec,
    tol: Tolerance = DEFAULT_TOL,
) -> ExtremalReport:
    """Extremal (or asymptotically extremal) distribution for type-1 balls.

    With a polyhedral ground norm this solves the mass-splitting LP and reads
    the attained atoms and recession escapes off the optimal vertex.  For
    non-polyhedral norms on the whole space, a single affine piece is handled
    by shifting every atom along the dual-norm maximizer; several pieces give
    an escaping-atom family along the steepest piece, matching the closed
    form nominal + eps * Lip.
    """
    support = _check_inputs(loss.dim, samples, ball)
    if ball.p != 1.0:
        raise UnsupportedCombination("extremal construction is for type-1 balls only")
    L = loss.piece_table(samples.atoms)
    nominal = float(samples.weights @ L.max(axis=1))
    if ball.eps == 0.0:
        return ExtremalReport(
            kind="attained",
            certified_value=nominal,
            distribution=DiscreteDistribution(samples.atoms.copy(), samples.weights.copy()),
        )

    if ball.norm.is_lp_representable(samples.dim):
        return _extremal_pwa_lp(loss, samples, ball, support, tol)
    if support.kind == "polyhedron":
        raise UnsupportedCombination(
            "polyhedral support needs a polyhedral ground norm for the "
            "extremal construction"
        )

    duals = np.array([dual_norm_eval(ball.norm, a) for a in loss.A])
    j_star = int(np.argmax(duals))
    lip = float(duals[j_star])
    if lip <= 1e-15:
        return ExtremalReport(
            kind="attained",
            certified_value=nominal,
            distribution=DiscreteDistribution(samples.atoms.copy(), samples.weights.copy()),
        )
    direction = norm_subgradient(ball.norm.dual_spec(), loss.A[j_star])
    if loss.n_pieces == 1:
        shifted = samples.atoms + ball.eps * direction[None, :]
        return ExtremalReport(
            kind="attained",
            certified_value=nominal + ball.eps * lip,
            distribution=DiscreteDistribution(shifted, samples.weights.copy()),
        )
    unit = min(float(samples.weights[0]), ball.eps)
    escape = EscapingAtom(
        origin=samples.atoms[0].copy(),
        direction=direction,
        donor=0,
        donor_unit=unit,
        rate_kind="linear",
        coef=ball.eps / unit,
    )
    family = AsymptoticFamily(
        base_atoms=samples.atoms.copy(),
        base_weights=samples.weights.copy(),
        escapes=(escape,),
    )
    return ExtremalReport(
        kind="asymptotic", certified_value=nominal + ball.eps * lip, family=family
    )
