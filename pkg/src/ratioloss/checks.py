"""Identity suite: numerical certificates that the constructed losses
really carry the divergences they claim to.

Each group returns a report dict with the worst residual observed, the
tolerance it is held to, and the case count.  run_all() drives them all
from one seed; the CLI surfaces the result as `ratioloss check`.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .generators import (BregmanGenerator, DiscretePair, builtin_generator,
                         diamond_transform, divergence_discrete,
                         weight_representation)
from .losses import (CompositeLoss, bayes_risk, canonical_ratio_map,
                     conditional_risk, convexity_margin,
                     excess_risk_identity_check, family_loss, shuford_weight)
from .optim import bfgs
from .synth import Rng

# Families exercised by the suite.  poly is taken at several exponents.
CHECK_FAMILIES = ("kulsif", "lr", "klest", "boost", "poly0", "poly1",
                  "poly6", "ew")


def _family(name: str):
    if name.startswith("poly"):
        return family_loss("poly", k=float(name[4:]))
    return family_loss(name)


def _gen(name: str) -> BregmanGenerator:
    if name.startswith("poly"):
        return builtin_generator("poly", k=float(name[4:]))
    return builtin_generator(name)


# Score ranges kept inside each family's numerically comfortable zone:
# ratios stay in roughly [0.15, 4] so fourth-order terms in the
# finite-difference checks remain small.
_BETA_RANGE = {
    "kulsif": (0.15, 4.0), "lr": (0.15, 4.0), "klest": (0.15, 4.0),
    "boost": (0.15, 4.0), "poly0": (0.15, 4.0), "poly1": (0.15, 4.0),
    "poly6": (0.2, 2.0), "ew": (0.15, 2.5),
}


def _random_pair(rng: np.random.Generator) -> DiscretePair:
    n = int(rng.integers(2, 7))
    q = rng.uniform(0.1, 1.0, n)
    q /= q.sum()
    p = rng.uniform(0.0, 1.0, n)
    p /= p.sum()
    return DiscretePair(q=q, p=p)


def check_excess_risk(seed: int = 0, n_pairs: int = 200,
                      tolerance: float = 1e-10) -> dict:
    """Risk gap of a score function equals half the divergence between
    the true ratio and the ratio the score encodes."""
    rng = Rng(seed).stream("check/excess")
    worst = 0.0
    cases = 0
    for name in CHECK_FAMILIES:
        loss = _family(name)
        lo, hi = _BETA_RANGE[name]
        for _ in range(n_pairs // len(CHECK_FAMILIES) + 1):
            pair = _random_pair(rng)
            # scores encode a perturbed ratio within the safe range
            beta_enc = rng.uniform(lo, hi, pair.q.size)
            f = loss.ratio_map.g_inv(beta_enc)
            # clip the true ratio into range by rescaling p where needed
            beta = np.clip(pair.beta, lo, hi)
            p = beta * pair.q
            pair_safe = DiscretePair(q=pair.q, p=p / p.sum())
            excess, half_breg = excess_risk_identity_check(loss, pair_safe, f)
            worst = max(worst, abs(excess - half_breg))
            cases += 1
    return {"group": "excess-risk", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def check_convexity(tolerance: float = 1e-9, fd_tolerance: float = 1e-8) -> dict:
    """Both convexity slacks are nonnegative for every canonical family,
    and numerical second derivatives of the partial losses agree."""
    x = np.geomspace(1e-6, 50.0, 400)
    worst = 0.0
    cases = 0
    for name in CHECK_FAMILIES:
        gen = _gen(name)
        rmap = canonical_ratio_map(gen)
        lower, upper = convexity_margin(gen, rmap, x)
        worst = max(worst, max(0.0, float(-lower.min()), float(-upper.min())))
        cases += x.size
    fd_worst = 0.0
    for name in CHECK_FAMILIES:
        loss = _family(name)
        lo, hi = _BETA_RANGE[name]
        ys = loss.ratio_map.g_inv(np.linspace(lo, hi, 60))
        for label in (1, -1):
            ell = loss.ell_pos if label == 1 else loss.ell_neg
            for y in ys:
                h = 0.01 * max(abs(y), 1e-3)
                num2 = (ell(y + h) - 2.0 * ell(y) + ell(y - h)) / h ** 2
                fd_worst = max(fd_worst, max(0.0, -float(num2)))
                cases += 1
    passed = worst <= tolerance and fd_worst <= fd_tolerance
    return {"group": "convexity", "max_residual": max(worst, fd_worst),
            "tolerance": max(tolerance, fd_tolerance), "cases": cases,
            "passed": passed,
            "detail": {"slack_violation": worst, "fd_violation": fd_worst}}


def check_weight_representation(seed: int = 0, n_cases: int = 100,
                                tolerance: float = 1e-6,
                                n_nodes: int = 4001) -> dict:
    """Pointwise divergence equals the integral of phi'' against the
    distance-to-threshold weight."""
    rng = Rng(seed).stream("check/weight-repr")
    worst = 0.0
    cases = 0
    for name in CHECK_FAMILIES:
        gen = _gen(name)
        for _ in range(n_cases):
            r, rhat = rng.uniform(0.1, 3.0, 2)
            direct = float(gen.phi(r) - gen.phi(rhat)
                           - gen.phi1(rhat) * (r - rhat))
            via_weight = weight_representation(gen, float(r), float(rhat),
                                               n_nodes=n_nodes)
            worst = max(worst, abs(direct - via_weight))
            cases += 1
    return {"group": "weight-representation", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def check_shuford(seed: int = 0, n_cases: int = 100,
                  tolerance: float = 1e-7) -> dict:
    """Both partial-loss derivative ratios give one weight function, and
    it matches phi''(x) (1+x)^3 at x = eta/(1-eta)."""
    rng = Rng(seed).stream("check/shuford")
    worst = 0.0
    cases = 0
    for name in CHECK_FAMILIES:
        loss = _family(name)
        gen = loss.generator
        lo, hi = _BETA_RANGE[name]
        for _ in range(n_cases // len(CHECK_FAMILIES) + 1):
            x = float(rng.uniform(lo, hi))
            eta = x / (1.0 + x)
            w = shuford_weight(loss, eta)  # certifies internal agreement
            closed = float(gen.phi2(x)) * (1.0 + x) ** 3
            rel = abs(w - closed) / max(abs(closed), 1e-12)
            worst = max(worst, rel)
            cases += 1
    return {"group": "shuford-weight", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def _bayes_risk_deriv(loss: CompositeLoss, eta: float, h: float) -> float:
    """Five-point central difference of the optimal conditional risk.

    Deliberately numerical: a finite difference of BR(u) = CR(u, link(u))
    only reduces to the envelope derivative when the link is the risk
    minimizer, so this is sensitive to properness violations.
    """
    br = lambda u: bayes_risk(loss, u)
    return (-br(eta + 2 * h) + 8 * br(eta + h)
            - 8 * br(eta - h) + br(eta - 2 * h)) / (12.0 * h)


def check_savage(seed: int = 0, n_cases: int = 100,
                 tolerance: float = 1e-8) -> dict:
    """Conditional regret equals the Bregman remainder of the optimal
    risk curve: CR(eta, yhat) - BR(etahat) - (eta - etahat) BR'(etahat)
    vanishes when yhat = link(etahat)."""
    rng = Rng(seed).stream("check/savage")
    worst = 0.0
    cases = 0
    for name in CHECK_FAMILIES:
        loss = _family(name)
        lo, hi = _BETA_RANGE[name]
        for _ in range(n_cases // len(CHECK_FAMILIES) + 1):
            eta = float(rng.uniform(0.05, 0.95))
            x_hat = float(rng.uniform(lo, hi))
            eta_hat = x_hat / (1.0 + x_hat)
            yhat = loss.link(eta_hat)
            # step keeps the five-point truncation below roundoff even for
            # the high-curvature families (poly6, ew)
            h = 1e-4 * min(eta_hat, 1.0 - eta_hat)
            lhs = conditional_risk(loss, eta, yhat)
            rhs = (bayes_risk(loss, eta_hat)
                   + (eta - eta_hat) * _bayes_risk_deriv(loss, eta_hat, h))
            worst = max(worst, abs(lhs - rhs))
            cases += 1
    return {"group": "savage-regret", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def check_diamond(seed: int = 0, n_cases: int = 120,
                  tolerance: float = 1e-10) -> dict:
    """The cost-curve transform of the binary entropy generator
    reproduces the logistic-family generator, and the transported
    divergence identity holds pointwise."""
    rng = Rng(seed).stream("check/diamond")
    entropy = lambda u: u * np.log(u) + (1.0 - u) * np.log1p(-u)
    entropy_d1 = lambda u: np.log(u) - np.log1p(-u)
    entropy_d2 = lambda u: 1.0 / (u * (1.0 - u))
    entropy_d3 = lambda u: 1.0 / (1.0 - u) ** 2 - 1.0 / u ** 2
    dia = diamond_transform(entropy, entropy_d1, entropy_d2, entropy_d3)
    lr = builtin_generator("lr")
    worst = 0.0
    cases = 0
    for _ in range(n_cases):
        z = float(rng.uniform(0.05, 10.0))
        worst = max(worst, abs(dia.phi(z) - lr.phi(z)),
                    abs(dia.phi2(z) - lr.phi2(z)))
        cases += 1
    # transported pointwise divergence: (1+x) d01(x/(1+x), y/(1+y))
    for _ in range(n_cases):
        x, y = rng.uniform(0.05, 10.0, 2)
        u, v = x / (1.0 + x), y / (1.0 + y)
        d01 = (entropy(u) - entropy(v)
               - (np.log(v) - np.log1p(-v)) * (u - v))
        lhs = (1.0 + x) * d01
        rhs = (dia.phi(x) - dia.phi(y) - dia.phi1(y) * (x - y))
        worst = max(worst, abs(lhs - rhs))
        cases += 1
    return {"group": "diamond-transform", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def check_affine_invariance(seed: int = 0, n_cases: int = 60,
                            tolerance: float = 1e-12) -> dict:
    """Adding a + b x to the generator leaves every divergence value
    unchanged."""
    rng = Rng(seed).stream("check/affine")
    worst = 0.0
    cases = 0
    for name in ("kulsif", "lr", "klest", "boost"):
        gen = _gen(name)
        for _ in range(n_cases):
            a, b = rng.uniform(-2.0, 2.0, 2)
            shifted = BregmanGenerator(
                name=f"{gen.name}+affine",
                phi=lambda x, g=gen, a=a, b=b: g.phi(x) + a + b * x,
                phi1=lambda x, g=gen, b=b: g.phi1(x) + b,
                phi2=gen.phi2, phi3=gen.phi3,
                domain_eps=gen.domain_eps)
            pair = _random_pair(rng)
            rhat = rng.uniform(0.2, 3.0, pair.q.size)
            d0 = divergence_discrete(gen, pair, rhat)
            d1 = divergence_discrete(shifted, pair, rhat)
            worst = max(worst, abs(d0 - d1))
            cases += 1
    return {"group": "affine-invariance", "max_residual": worst,
            "tolerance": tolerance, "cases": cases,
            "passed": worst <= tolerance}


def properness_residuals(loss: CompositeLoss, etas: Sequence[float],
                         max_iter: int = 200) -> np.ndarray:
    """For each eta, minimize the conditional risk over scores starting
    away from the link value and report |minimizer - link(eta)| scaled
    by |link(eta)| where that is large."""
    out = []
    for eta in etas:
        y_star = loss.link(float(eta))

        def obj(y: np.ndarray):
            yv = float(y[0])
            val = conditional_risk(loss, float(eta), yv)
            h = 1e-6 * max(1.0, abs(yv))
            g = (conditional_risk(loss, float(eta), yv + h)
                 - conditional_risk(loss, float(eta), yv - h)) / (2 * h)
            return val, np.array([g])

        res = bfgs(obj, np.array([y_star + 0.1]), max_iter=max_iter,
                   grad_tol=1e-12)
        out.append(abs(float(res.x_star[0]) - y_star)
                   / max(1.0, abs(y_star)))
    return np.array(out)


CHECK_GROUPS: dict[str, Callable[..., dict]] = {
    "excess-risk": check_excess_risk,
    "convexity": check_convexity,
    "weight-representation": check_weight_representation,
    "shuford-weight": check_shuford,
    "savage-regret": check_savage,
    "diamond-transform": check_diamond,
    "affine-invariance": check_affine_invariance,
}


def run_all(seed: int = 0) -> dict:
    """Run every identity group.  Returns {"groups": [...], "passed": bool}."""
    groups = []
    for name, fn in CHECK_GROUPS.items():
        if name == "convexity":
            groups.append(fn())
        else:
            groups.append(fn(seed=seed))
    return {"groups": groups, "passed": all(g["passed"] for g in groups)}
