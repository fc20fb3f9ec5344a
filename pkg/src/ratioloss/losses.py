"""Classification losses constructed from Bregman generators.

Given a generator phi and a strictly increasing ratio map g (scores to
ratio estimates), the induced composite loss has partial losses

    ell_pos(y) = c1 + c2 - phi'(g(y))
    ell_neg(y) = c1 + g(y) phi'(g(y)) - phi(g(y))

with inverse link  eta_hat(y) = g(y) / (1 + g(y)).  Minimizing the
resulting classification risk over P-vs-Q samples estimates the density
ratio dP/dQ through beta_hat = g(score); the excess classification risk
equals exactly half the Q-averaged Bregman divergence between the true
ratio and beta_hat.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .generators import (DOMAIN_EPS, RATIO_CAP, BregmanGenerator,
                         DiscretePair, builtin_generator, divergence_discrete)

ScalarMap = Callable[[np.ndarray], np.ndarray]


class CertificationError(RuntimeError):
    """A loss failed one of its structural self-checks."""


@dataclass(frozen=True)
class RatioMap:
    """Strictly increasing map g from scores to ratio estimates.

    g_inv is the inverse, g_inv1/g_inv2 its first two derivatives.
    canonical_for names the generator whose canonical link this map is
    (g_inv == phi'), or None.
    """

    g: ScalarMap
    g_inv: ScalarMap
    g_inv1: ScalarMap
    g_inv2: ScalarMap
    canonical_for: Optional[str] = None

    def g1(self, y):
        """dg/dy via the inverse-function rule."""
        return 1.0 / self.g_inv1(self.g(y))

    def g2(self, y):
        b = self.g(y)
        d1 = self.g_inv1(b)
        return -self.g_inv2(b) / d1 ** 3


def identity_ratio_map() -> RatioMap:
    ident = lambda x: np.asarray(x, dtype=float)
    return RatioMap(
        g=ident,
        g_inv=ident,
        g_inv1=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        g_inv2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def exp_ratio_map(scale: float = 1.0) -> RatioMap:
    """g(y) = exp(scale * y); scale=1 is the logistic link, scale=2 boosting."""
    s = float(scale)
    if s <= 0:
        raise ValueError("scale must be positive")
    return RatioMap(
        g=lambda y: np.exp(np.minimum(s * np.asarray(y, dtype=float), 709.0)),
        g_inv=lambda x: np.log(np.maximum(np.asarray(x, dtype=float), DOMAIN_EPS)) / s,
        g_inv1=lambda x: 1.0 / (s * np.maximum(np.asarray(x, dtype=float), DOMAIN_EPS)),
        g_inv2=lambda x: -1.0 / (s * np.maximum(np.asarray(x, dtype=float), DOMAIN_EPS) ** 2),
    )


def _newton_inverse(gen: BregmanGenerator) -> ScalarMap:
    """Invert phi1 by bracketed, safeguarded Newton (fallback for
    generators without a closed-form inverse)."""
    eps = gen.domain_eps

    def inv(y):
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        y = np.clip(y, gen.phi1(np.array(eps)), gen.phi1(np.array(RATIO_CAP)))
        lo = np.full_like(y, eps)
        hi = np.ones_like(y)
        for _ in range(200):
            grow = gen.phi1(hi) < y
            if not np.any(grow):
                break
            hi[grow] *= 2.0
        else:
            raise RuntimeError("phi1 inversion: bracketing failed")
        x = 0.5 * (lo + hi)
        for _ in range(200):
            fx = gen.phi1(x) - y
            lo = np.where(fx <= 0, x, lo)
            hi = np.where(fx > 0, x, hi)
            step = fx / gen.phi2(x)
            cand = x - step
            bad = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
            x = np.where(bad, 0.5 * (lo + hi), cand)
            if np.max(np.abs(fx)) < 1e-12 * max(1.0, float(np.max(np.abs(y)))):
                break
        return float(x[0]) if scalar else x

    return inv


def canonical_ratio_map(gen: BregmanGenerator) -> RatioMap:
    """The canonical link for gen: scores live on the range of phi',
    and g = (phi')^{-1}."""
    g = gen.inverse_phi1 if gen.inverse_phi1 is not None else _newton_inverse(gen)
    name = gen.name if gen.k is None else f"{gen.name}:{gen.k}"
    return RatioMap(g=g, g_inv=gen.phi1, g_inv1=gen.phi2, g_inv2=gen.phi3,
                    canonical_for=name)


@dataclass(frozen=True)
class CompositeLoss:
    """Partial losses with derivatives, plus the link structure.

    score_bounds delimits the scores on which the composition is a
    faithful rendering of the divergence: outside, either the ratio map
    saturates or the mapped ratio exceeds the cap.  Fit diagnostics count
    training scores that land outside these bounds.
    """

    ell_pos: ScalarMap
    ell_neg: ScalarMap
    ell_pos1: ScalarMap
    ell_neg1: ScalarMap
    ell_pos2: ScalarMap
    ell_neg2: ScalarMap
    inv_link: ScalarMap
    inv_link1: ScalarMap
    ratio_map: RatioMap
    generator: BregmanGenerator
    c1: float = 0.0
    c2: float = 0.0
    score_bounds: tuple = (-np.inf, np.inf)

    def link(self, eta):
        """Psi(eta) = g^{-1}(eta / (1 - eta)) on eta in (0, 1)."""
        eta = np.asarray(eta, dtype=float)
        return self.ratio_map.g_inv(eta / (1.0 - eta))

    def ell(self, label: int, yhat):
        if label == 1:
            return self.ell_pos(yhat)
        if label == -1:
            return self.ell_neg(yhat)
        raise ValueError("label must be +1 or -1")


def construct_loss(gen: BregmanGenerator, rmap: RatioMap,
                   c1: float = 0.0, c2: float = 0.0,
                   score_bounds: tuple = (-np.inf, np.inf)) -> CompositeLoss:
    """Build the composite loss induced by (gen, rmap).

    For the canonical link the positive partial loss reduces exactly to
    the linear form c1 + c2 - y, which is what gets implemented (it is
    also the analytic extension past the link's domain floor).
    """
    canon_name = gen.name if gen.k is None else f"{gen.name}:{gen.k}"
    canonical = rmap.canonical_for == canon_name
    g, phi, phi1, phi2, phi3 = rmap.g, gen.phi, gen.phi1, gen.phi2, gen.phi3

    if canonical:
        ell_pos = lambda y: (c1 + c2) - np.asarray(y, dtype=float)
        ell_pos1 = lambda y: -np.ones_like(np.asarray(y, dtype=float))
        ell_pos2 = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    else:
        ell_pos = lambda y: (c1 + c2) - phi1(g(y))
        ell_pos1 = lambda y: -phi2(g(y)) * rmap.g1(y)
        def ell_pos2(y):
            b = g(y)
            d1 = rmap.g1(y)
            return -(phi3(b) * d1 ** 2 + phi2(b) * rmap.g2(y))

    def ell_neg(y):
        b = g(y)
        return c1 + b * phi1(b) - phi(b)

    def ell_neg1(y):
        b = g(y)
        return b * phi2(b) * rmap.g1(y)

    def ell_neg2(y):
        b = g(y)
        d1 = rmap.g1(y)
        return phi2(b) * d1 ** 2 + b * (phi3(b) * d1 ** 2 + phi2(b) * rmap.g2(y))

    def inv_link(y):
        b = g(y)
        return b / (1.0 + b)

    def inv_link1(y):
        b = g(y)
        return rmap.g1(y) / (1.0 + b) ** 2

    return CompositeLoss(ell_pos=ell_pos, ell_neg=ell_neg,
                         ell_pos1=ell_pos1, ell_neg1=ell_neg1,
                         ell_pos2=ell_pos2, ell_neg2=ell_neg2,
                         inv_link=inv_link, inv_link1=inv_link1,
                         ratio_map=rmap, generator=gen, c1=c1, c2=c2,
                         score_bounds=(float(score_bounds[0]),
                                       float(score_bounds[1])))


FAMILY_NAMES = ("kulsif", "lr", "klest", "boost", "poly", "ew")


def family_loss(name: str, k: float = 0.0, c1: float = 0.0,
                c2: float = 0.0) -> CompositeLoss:
    """The conventional (generator, ratio map) pairing for each family.

    kulsif and klest score directly in ratio units (identity map), lr and
    boost use exponential links, poly and ew use their canonical links.
    Score bounds mark where each composition stops being faithful; they
    are one-sided for the families whose losses extend smoothly through
    zero scores (only a ratio-cap explosion is degenerate there) and
    absent for ew, whose logarithmic map cannot explode at all.
    """
    if name == "kulsif":
        return construct_loss(builtin_generator("kulsif"), identity_ratio_map(),
                              c1, c2, score_bounds=(-np.inf, RATIO_CAP))
    if name == "lr":
        return construct_loss(builtin_generator("lr"), exp_ratio_map(1.0),
                              c1, c2, score_bounds=(-np.inf, np.log(RATIO_CAP)))
    if name == "klest":
        gen = builtin_generator("klest")
        loss = construct_loss(gen, identity_ratio_map(), c1, c2,
                              score_bounds=(-np.inf, RATIO_CAP))
        eps = gen.domain_eps

        # b phi'(b) - phi(b) = b exactly, and -log extends by its tangent
        # at the domain floor: both partial losses stay C^1 convex with
        # value and slope consistent wherever scores dip below the floor.
        def ell_pos(y):
            y = np.asarray(y, dtype=float)
            yc = np.maximum(y, eps)
            return (c1 + c2) - np.log(yc) + np.where(y >= eps, 0.0,
                                                     (eps - y) / eps)

        def ell_pos2(y):
            y = np.asarray(y, dtype=float)
            return np.where(y >= eps, 1.0 / np.maximum(y, eps) ** 2, 0.0)

        return replace(
            loss,
            ell_pos=ell_pos,
            ell_pos1=lambda y: -1.0 / np.maximum(np.asarray(y, dtype=float), eps),
            ell_pos2=ell_pos2,
            ell_neg=lambda y: c1 + np.asarray(y, dtype=float),
            ell_neg1=lambda y: np.ones_like(np.asarray(y, dtype=float)),
            ell_neg2=lambda y: np.zeros_like(np.asarray(y, dtype=float)))
    if name == "boost":
        return construct_loss(builtin_generator("boost"), exp_ratio_map(2.0),
                              c1, c2,
                              score_bounds=(-np.inf, 0.5 * np.log(RATIO_CAP)))
    if name == "poly":
        gen = builtin_generator("poly", k=k)
        return construct_loss(gen, canonical_ratio_map(gen), c1, c2,
                              score_bounds=(-np.inf, float(gen.phi1(RATIO_CAP))))
    if name == "ew":
        gen = builtin_generator("ew")
        loss = construct_loss(gen, canonical_ratio_map(gen), c1, c2)
        eps = gen.domain_eps
        tangent = 0.5 * np.log(2.0 * eps)

        # Legendre form (y/2)(log 2y - 1) on the domain, its tangent at
        # the floor below: the composed slope is already the tangent
        # slope there, so only the value needs the linear continuation.
        def ell_neg(y):
            y = np.asarray(y, dtype=float)
            yc = np.maximum(y, eps)
            core = 0.5 * yc * (np.log(2.0 * yc) - 1.0)
            return c1 + core + np.where(y >= eps, 0.0, tangent * (y - eps))

        def ell_neg2(y):
            y = np.asarray(y, dtype=float)
            return np.where(y >= eps, 0.5 / np.maximum(y, eps), 0.0)

        return replace(
            loss,
            ell_neg=ell_neg,
            ell_neg1=lambda y: 0.5 * np.log(
                2.0 * np.maximum(np.asarray(y, dtype=float), eps)),
            ell_neg2=ell_neg2)
    raise ValueError(f"unknown family {name!r}")


def gamma_funcs(gen: BregmanGenerator, c1: float = 0.0,
                c2: float = 0.0) -> tuple[ScalarMap, ScalarMap]:
    """The concave potential gamma and its derivative on (0, 1).

    gamma(eta) = -(1 - eta) phi(eta / (1 - eta)) + c2 eta + c1.  Used as
    an independent oracle for the constructed losses: ell_pos(y) =
    gamma(eta_hat) + (1 - eta_hat) gamma'(eta_hat) at eta_hat =
    inv_link(y), and ell_neg analogously with -eta_hat gamma'.
    """
    def gamma(eta):
        eta = np.asarray(eta, dtype=float)
        x = eta / (1.0 - eta)
        return -(1.0 - eta) * gen.phi(x) + c2 * eta + c1

    def gamma1(eta):
        eta = np.asarray(eta, dtype=float)
        x = eta / (1.0 - eta)
        return gen.phi(x) - (1.0 + x) * gen.phi1(x) + c2

    return gamma, gamma1


def conditional_risk(loss: CompositeLoss, eta: float, yhat) -> float:
    """CR(eta, yhat) = eta ell_pos(yhat) + (1 - eta) ell_neg(yhat)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return eta * loss.ell_pos(yhat) + (1.0 - eta) * loss.ell_neg(yhat)


def bayes_risk(loss: CompositeLoss, eta: float) -> float:
    """Pointwise minimal risk CR(eta, Psi(eta)) for a proper loss."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return conditional_risk(loss, eta, loss.link(eta))


def shuford_weight(loss: CompositeLoss, eta: float,
                   rel_tol: float = 1e-7) -> float:
    """The properness weight w(eta) of the underlying proper loss.

    Computed twice, from each partial loss:
        w = lambda_pos'(eta) / (eta - 1) = lambda_neg'(eta) / eta,
    where lambda_y(eta) = ell_y(Psi(eta)).  The two values must agree to
    rel_tol or a CertificationError is raised; their mean is returned.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly inside (0, 1)")
    y = loss.link(eta)
    x = eta / (1.0 - eta)
    psi1 = loss.ratio_map.g_inv1(x) / (1.0 - eta) ** 2
    r_pos = float(loss.ell_pos1(y)) * psi1 / (eta - 1.0)
    r_neg = float(loss.ell_neg1(y)) * psi1 / eta
    denom = max(abs(r_pos), abs(r_neg), 1e-300)
    if abs(r_pos - r_neg) / denom > rel_tol:
        raise CertificationError(
            f"partial-loss weight ratios disagree at eta={eta}: "
            f"{r_pos!r} vs {r_neg!r}")
    return 0.5 * (r_pos + r_neg)


def convexity_margin(gen: BregmanGenerator, rmap: RatioMap, x):
    """Slack of the two-sided convexity condition at ratio value x > 0.

    middle(x) = phi'''(x)/phi''(x) - g_inv''(x)/g_inv'(x) must lie in
    [-1/x, 0] for both partial losses to be convex in the score.  Returns
    (middle + 1/x, -middle); the loss is certified convex on a grid when
    both slacks are nonnegative everywhere.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive")
    middle = gen.phi3(x) / gen.phi2(x) - rmap.g_inv2(x) / rmap.g_inv1(x)
    return middle + 1.0 / x, -middle


def excess_risk_identity_check(loss: CompositeLoss, pair: DiscretePair,
                               f: np.ndarray) -> tuple[float, float]:
    """Both sides of the excess-risk identity on a discrete pair.

    Returns (excess risk of the score vector f, half the Q-averaged
    divergence between beta and g(f)); the two agree for every composite
    loss built here, each side coming from an independent path.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != pair.q.shape:
        raise ValueError("f must assign one score per support point")
    f_star = loss.ratio_map.g_inv(pair.beta)

    def risk(scores):
        return float(0.5 * pair.p @ loss.ell_pos(scores)
                     + 0.5 * pair.q @ loss.ell_neg(scores))

    excess = risk(f) - risk(f_star)
    half_breg = 0.5 * divergence_discrete(loss.generator, pair,
                                          loss.ratio_map.g(f))
    return excess, half_breg


def reid_convexity_margins(loss: CompositeLoss, etahat,
                           h: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Slacks of the link-space convexity condition at eta_hat in (0,1).

    Uses the proper-loss weight w(eta) = lambda_neg'(eta)/eta with w'
    taken by central differences, and requires
        -1/eta <= w'/w - Psi''/Psi' <= 1/(1-eta).
    Returns (lower slack, upper slack); both nonnegative iff the
    condition holds.  Agrees with convexity_margin's verdict at
    x = eta/(1-eta).
    """
    etahat = np.atleast_1d(np.asarray(etahat, dtype=float))
    if np.any((etahat <= 0.0) | (etahat >= 1.0)):
        raise ValueError("etahat must lie strictly inside (0, 1)")

    def w(eta):
        y = loss.link(eta)
        x = eta / (1.0 - eta)
        psi1 = loss.ratio_map.g_inv1(x) / (1.0 - eta) ** 2
        return loss.ell_neg1(y) * psi1 / eta

    x = etahat / (1.0 - etahat)
    psi1 = loss.ratio_map.g_inv1(x) / (1.0 - etahat) ** 2
    psi2 = (loss.ratio_map.g_inv2(x) / (1.0 - etahat) ** 4
            + 2.0 * loss.ratio_map.g_inv1(x) / (1.0 - etahat) ** 3)
    w0 = w(etahat)
    w1 = (w(etahat + h) - w(etahat - h)) / (2.0 * h)
    middle = w1 / w0 - psi2 / psi1
    return middle + 1.0 / etahat, 1.0 / (1.0 - etahat) - middle
