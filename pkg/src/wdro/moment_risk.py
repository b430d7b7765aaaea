"""Worst-case quadratic risk over moment (Gelbrich) uncertainty sets.

The uncertainty set collects all mean/covariance pairs within a Gelbrich
distance ``eps`` of a nominal pair.  For a quadratic loss
``xi' Q xi + 2 q' xi`` the worst case reduces to a one-dimensional root
finding problem in the dual multiplier gamma: with Q = V diag(lam) V',
r = V'(q + Q mu) and S = V' Sigma V, the optimality condition reads

    sum_k (r_k^2 + lam_k^2 S_kk) / (gamma - lam_k)^2 = eps^2,

whose left side is strictly decreasing in gamma and equals the squared
Gelbrich distance from the center to the extremal moments at gamma.  The
root therefore puts the extremal pair exactly on the ball boundary.  When
no root exists with gamma I > Q and gamma >= 0, the multiplier degenerates
and the dual objective is minimized directly instead; the result is
flagged through ``interior=False``.

Because the worst case depends only on moments, the same machinery prices
worst-case risks over elliptical families with fixed generator.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Optional

import numpy as np

from ._validation import as_matrix, as_vector
from .empirical_risk import QuadraticLoss
from .errors import DimensionMismatch, NotPSD, NumericalFailure, UnsupportedCase
from .numerics import DEFAULT_TOL, Tolerance, bisect_root, minimize_scalar_convex, psd_sqrt, sym_eig
from .transport import DiscreteDistribution, MomentPair, gelbrich_distance, moments, wasserstein_p

__all__ = [
    "GelbrichBall",
    "EllipticalSpec",
    "GelbrichRiskResult",
    "gelbrich_hull_contains",
    "projection_check",
    "gelbrich_risk_quadratic",
    "support_V",
    "wc_risk_elliptical_quadratic",
]


@dataclasses.dataclass(frozen=True, eq=False)
class GelbrichBall:
    """All moment pairs within Gelbrich distance eps of the center."""

    center: MomentPair
    eps: float

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("ball radius eps must be nonnegative")
        object.__setattr__(self, "eps", float(self.eps))


_GENERATORS = ("gaussian", "logistic", "t")


@dataclasses.dataclass(frozen=True, eq=False)
class EllipticalSpec:
    """Elliptical family member identified by generator and moments.

    The generator only labels the family; worst-case values depend on the
    moments alone.  Sampling and density evaluation are provided for the
    Gaussian generator.
    """

    generator: str
    moments: MomentPair
    nu: Optional[float] = None

    def __post_init__(self):
        if self.generator not in _GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.generator == "t":
            if self.nu is None or not self.nu > 2:
                raise ValueError("the t generator needs nu > 2 for finite covariance")

    def sample(self, rng: np.random.RandomState, n: int) -> np.ndarray:
        if self.generator != "gaussian":
            raise UnsupportedCase("sampling is implemented for the Gaussian generator only")
        root = psd_sqrt(self.moments.sigma)
        return self.moments.mu[None, :] + rng.randn(n, self.moments.dim) @ root.T

    def logpdf(self, x) -> float:
        if self.generator != "gaussian":
            raise UnsupportedCase("densities are implemented for the Gaussian generator only")
        x = as_vector(x, "x")
        sigma = self.moments.sigma
        eig = sym_eig(sigma)
        if eig.values.min() <= 0:
            raise NotPSD("a density requires a positive definite covariance")
        diff = eig.vectors.T @ (x - self.moments.mu)
        quad = float(np.sum(diff**2 / eig.values))
        logdet = float(np.sum(np.log(eig.values)))
        m = self.moments.dim
        return -0.5 * (m * math.log(2 * math.pi) + logdet + quad)


class GelbrichRiskResult(NamedTuple):
    value: float
    extremal: MomentPair
    gamma_star: float
    interior: bool
    primal_value: float
    regularization: float


def gelbrich_hull_contains(
    ball: GelbrichBall, candidate: MomentPair, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """Membership test: Gelbrich distance to the center at most eps."""
    if candidate.dim != ball.center.dim:
        raise DimensionMismatch(
            f"candidate dimension {candidate.dim} differs from center {ball.center.dim}"
        )
    dist = gelbrich_distance(ball.center, candidate)
    return dist <= ball.eps + max(tol.abs_tol, tol.rel_tol * (1.0 + ball.eps))


def projection_check(
    ball: GelbrichBall,
    Q: DiscreteDistribution,
    reference: DiscreteDistribution,
    p: float = 2.0,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """One instance of the implication: a type-p ball maps into the hull.

    If W_p(Q, reference) <= eps (and p >= 2, so the type-2 distance is no
    larger) then the moments of Q must lie in the Gelbrich ball around the
    moments of the reference.  Returns the truth of that implication; the
    ball center must carry the reference moments.
    """
    if p < 2.0:
        raise ValueError("the moment projection needs order p >= 2")
    ref_moments = moments(reference)
    if (
        np.max(np.abs(ref_moments.mu - ball.center.mu)) > 1e-8
        or np.max(np.abs(ref_moments.sigma - ball.center.sigma)) > 1e-8
    ):
        raise ValueError("ball center must equal the reference distribution's moments")
    dist = wasserstein_p(Q, reference, p).distance
    premise = dist <= ball.eps + tol.abs_tol
    if not premise:
        return True
    return gelbrich_hull_contains(ball, moments(Q), tol)


def _quadratic_moment_risk(loss: QuadraticLoss, mp: MomentPair) -> float:
    return float(
        np.trace(loss.Q @ mp.sigma) + mp.mu @ loss.Q @ mp.mu + 2.0 * loss.q @ mp.mu
    )


def gelbrich_risk_quadratic(
    loss: QuadraticLoss,
    center: MomentPair,
    eps: float,
    tol: Tolerance = DEFAULT_TOL,
) -> GelbrichRiskResult:
    """Worst-case quadratic loss over a Gelbrich ball of moment pairs.

    Solves the scalar boundary equation for the dual multiplier and returns
    the value together with the extremal moments

        mu* = (gamma I - Q)^{-1} (gamma mu + q),
        Sigma* = gamma^2 (gamma I - Q)^{-1} Sigma (gamma I - Q)^{-1}.

    The value is computed from the dual objective and cross-checked against
    the primal risk of the extremal pair.  A rank-deficient center
    covariance is nudged by delta*I (delta reported in the result).  When
    the boundary equation has no admissible root the dual objective is
    minimized directly and ``interior`` is False.
    """
    if center.dim != loss.dim:
        raise DimensionMismatch(
            f"loss dimension {loss.dim} does not match center dimension {center.dim}"
        )
    if not eps > 0:
        raise ValueError("eps must be positive")
    m = center.dim
    mu_hat = center.mu

    if np.all(loss.Q == 0.0):
        # pure mean shift: covariance cannot change a linear loss
        qn = float(np.linalg.norm(loss.q))
        if qn == 0.0:
            return GelbrichRiskResult(0.0, center, 0.0, False, 0.0, 0.0)
        mu_star = mu_hat + eps * loss.q / qn
        value = 2.0 * float(loss.q @ mu_hat) + 2.0 * eps * qn
        extremal = MomentPair(mu_star, center.sigma)
        return GelbrichRiskResult(value, extremal, qn / eps, True, value, 0.0)

    delta = 0.0
    sigma = center.sigma
    eig_s = np.linalg.eigvalsh(sigma)
    if eig_s.min() <= 1e-12 * max(1.0, eig_s.max()):
        delta = 1e-10 * float(np.trace(sigma)) / m
        if delta <= 0.0:
            delta = 1e-12
        sigma = sigma + delta * np.eye(m)

    eig = sym_eig(loss.Q, tol=tol)
    lam, V = eig.values, eig.vectors
    r = V.T @ (loss.q + loss.Q @ mu_hat)
    S_t = V.T @ sigma @ V
    s_diag = np.diag(S_t).copy()
    numer = r**2 + lam**2 * s_diag
    lam_max = float(lam[0])

    mu_coef_q = V.T @ loss.q
    mu_coef_m = V.T @ mu_hat
    base = eps**2 - float(mu_hat @ mu_hat) - float(np.trace(sigma))

    def lhs(g: float) -> float:
        return float(np.sum(numer / (g - lam) ** 2))

    def dual_value(g: float) -> float:
        rg = mu_coef_q + g * mu_coef_m
        return (
            g * base
            + float(np.sum(rg**2 / (g - lam)))
            + g * g * float(np.sum(s_diag / (g - lam)))
        )

    if lam_max >= 0.0:
        g_lo = lam_max + 1e-12 * (1.0 + abs(lam_max))
    else:
        g_lo = 0.0
    s_tot = float(np.sum(numer))
    g_hi = g_lo + math.sqrt(max(s_tot, 0.0)) / eps + 1.0

    # the left side must decrease along the ray; otherwise fall back to
    # minimizing the dual objective directly
    probes = np.linspace(g_lo + 1e-9 * (1.0 + g_lo), g_hi, 5)
    monotone = all(lhs(a) >= lhs(b) - 1e-9 for a, b in zip(probes, probes[1:]))

    interior = monotone and lhs(g_lo) >= eps**2
    if interior:
        gamma = bisect_root(lambda g: lhs(g) - eps**2, (g_lo, g_hi), tol=tol, expand="none")
    else:
        gamma, _ = minimize_scalar_convex(dual_value, domain=(g_lo, g_hi), tol=tol)

    denom = gamma - lam
    mu_star = V @ ((mu_coef_q + gamma * mu_coef_m) / denom)
    scale = gamma / denom
    sigma_star = V @ (S_t * scale[:, None] * scale[None, :]) @ V.T
    extremal = MomentPair(mu_star, 0.5 * (sigma_star + sigma_star.T))

    value = dual_value(gamma)
    primal = _quadratic_moment_risk(loss, extremal)
    if interior and abs(value - primal) > 1e-7 * (1.0 + abs(value)):
        raise NumericalFailure(
            f"primal-dual mismatch: dual {value!r} vs primal {primal!r}"
        )
    return GelbrichRiskResult(value, extremal, float(gamma), interior, primal, delta)


def support_V(
    q,
    Qm,
    center: MomentPair,
    eps: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Support function of the lifted moment set in (mu, second moment).

    sup over the hull of q' mu + Tr[Qm M] with M = Sigma + mu mu' equals the
    worst-case quadratic risk with pieces Qm and linear coefficient q/2.
    """
    q = as_vector(q, "q")
    Qm = as_matrix(Qm, "Qm")
    if np.all(Qm == 0.0) and np.all(q == 0.0):
        return 0.0
    result = gelbrich_risk_quadratic(QuadraticLoss(Qm, 0.5 * q), center, eps, tol)
    return result.value


def wc_risk_elliptical_quadratic(
    loss: QuadraticLoss,
    nominal: EllipticalSpec,
    eps: float,
    tol: Tolerance = DEFAULT_TOL,
):
    """Worst-case quadratic risk over elliptical distributions in the ball.

    The value depends on the nominal distribution only through its moments;
    the extremal member keeps the nominal generator.
    """
    result = gelbrich_risk_quadratic(loss, nominal.moments, eps, tol)
    extremal = EllipticalSpec(nominal.generator, result.extremal, nominal.nu)
    return result.value, extremal
