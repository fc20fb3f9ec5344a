"""Density ratio estimation by regularized kernel risk minimization.

Samples from P get label +1 and samples from Q label -1; a kernel
expansion f(x) = sum_i c_i k(x, x_i) over the pooled points is fitted by
BFGS on the penalized average classification risk

    (1/N) sum_i ell(y_i, f(x_i)) + alpha c' G c,

and the ratio estimate is beta_hat(x) = g(f(x)) through the loss's
ratio map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .generators import DOMAIN_EPS, RATIO_CAP, BregmanGenerator, bregman_term
from .kernels import GRAM_JITTER, KernelSpec, as_points, gram
from .losses import CompositeLoss, family_loss
from .optim import OptimResult, bfgs
from .quadrature import integrate
from .synth import PiecewisePairSpec, Rng, piecewise_beta

CLAMP_BUDGET = 0.05


class FitError(RuntimeError):
    """A fit produced an unusable model."""


@dataclass(frozen=True)
class SampleSet:
    """Numerator (P) and denominator (Q) samples, 1-d or (n, d)."""

    xs_p: np.ndarray
    xs_q: np.ndarray

    def __post_init__(self):
        xp = as_points(self.xs_p)
        xq = as_points(self.xs_q)
        if xp.shape[1] != xq.shape[1]:
            raise ValueError("P and Q samples have mismatched dimensions")
        object.__setattr__(self, "xs_p", xp)
        object.__setattr__(self, "xs_q", xq)

    @property
    def pooled(self) -> np.ndarray:
        return np.vstack([self.xs_p, self.xs_q])

    @property
    def labels(self) -> np.ndarray:
        return np.concatenate([np.ones(len(self.xs_p)),
                               -np.ones(len(self.xs_q))])


@dataclass
class RatioModel:
    kernel: KernelSpec
    centers: np.ndarray
    coeffs: np.ndarray
    loss: CompositeLoss
    alpha: float
    family: str = ""
    k: float = 0.0
    train_risk: float = float("nan")
    status: str = ""
    iterations: int = 0
    clamp_count: int = 0

    def scores(self, xs) -> np.ndarray:
        return gram(self.kernel, xs, self.centers) @ self.coeffs


def empirical_risk(loss: CompositeLoss, gram_matrix: np.ndarray,
                   labels: np.ndarray, coeffs: np.ndarray,
                   alpha: float) -> tuple[float, np.ndarray]:
    """Penalized average risk and its gradient in the coefficients."""
    s = gram_matrix @ coeffs
    pos = labels > 0
    n = labels.size
    value = (float(np.sum(loss.ell_pos(s[pos]))) +
             float(np.sum(loss.ell_neg(s[~pos])))) / n
    value += alpha * float(coeffs @ s)
    v = np.empty_like(s)
    v[pos] = loss.ell_pos1(s[pos])
    v[~pos] = loss.ell_neg1(s[~pos])
    grad = gram_matrix @ v / n + 2.0 * alpha * s
    return value, grad


def _clamped_fraction(loss: CompositeLoss, scores: np.ndarray) -> float:
    lo, hi = loss.score_bounds
    return float(np.mean((scores <= lo) | (scores >= hi)))


def fit(samples: SampleSet, loss: CompositeLoss, kernel: KernelSpec,
        alpha: float, max_iter: int = 100, grad_tol: float = 1e-8,
        clamp_budget: Optional[float] = CLAMP_BUDGET,
        family: str = "", k: float = 0.0) -> RatioModel:
    """Fit a kernel ratio model by BFGS from the zero coefficient vector.

    Fails loudly when more than clamp_budget of the fitted training
    scores fall outside the ratio map's usable range, which signals a
    diverged or degenerate fit rather than a usable estimator.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    centers = samples.pooled
    labels = samples.labels
    g_matrix = gram(kernel, centers, centers)

    def obj(c):
        return empirical_risk(loss, g_matrix, labels, c, alpha)

    res = bfgs(obj, np.zeros(len(centers)), max_iter=max_iter, grad_tol=grad_tol)
    model = RatioModel(kernel=kernel, centers=centers, coeffs=res.x_star,
                       loss=loss, alpha=alpha, family=family, k=k,
                       train_risk=res.f_star, status=res.status,
                       iterations=res.iterations)
    if clamp_budget is not None:
        frac = _clamped_fraction(loss, g_matrix @ res.x_star)
        if frac > clamp_budget:
            raise FitError(
                f"{frac:.1%} of training scores fall outside the ratio "
                f"map's range (budget {clamp_budget:.1%})")
    return model


def predict_ratio(model: RatioModel, xs) -> np.ndarray:
    """Ratio estimates g(f(x)), capped into [1e-12, 1e6].

    Out-of-range raw values are counted on the model's clamp_count.
    """
    raw = model.loss.ratio_map.g(model.scores(xs))
    clamped = (raw <= DOMAIN_EPS) | (raw >= RATIO_CAP)
    model.clamp_count += int(np.sum(clamped))
    return np.clip(raw, DOMAIN_EPS, RATIO_CAP)


def kulsif_fit_closed_form(samples: SampleSet, kernel: KernelSpec,
                           alpha: float) -> RatioModel:
    """Direct linear-system solution of the kulsif objective.

    The first-order condition of the kulsif empirical risk is solved by
    (D_Q G + 2 alpha N I) c = 1_P, with a 1e-10 diagonal jitter when
    alpha is zero.  Matches the BFGS fit in predicted scores.
    """
    centers = samples.pooled
    labels = samples.labels
    n = labels.size
    g_matrix = gram(kernel, centers, centers)
    a = np.where(labels < 0)[0]
    lhs = np.zeros_like(g_matrix)
    lhs[a, :] = g_matrix[a, :]
    ridge = 2.0 * alpha * n if alpha > 0 else GRAM_JITTER
    lhs[np.diag_indices(n)] += ridge
    rhs = (labels > 0).astype(float)
    try:
        coeffs = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"kulsif linear system is singular: {exc}") from exc
    loss = family_loss("kulsif")
    value, _ = empirical_risk(loss, g_matrix, labels, coeffs, alpha)
    return RatioModel(kernel=kernel, centers=centers, coeffs=coeffs,
                      loss=loss, alpha=alpha, family="kulsif",
                      train_risk=value, status="closed_form")


def _select_alpha(alphas: Sequence[float], risks: Sequence[float]) -> float:
    """Smallest alpha among those attaining the minimal risk."""
    best = min(risks)
    return min(a for a, r in zip(alphas, risks) if r == best)


def _stratified_folds(n_p: int, n_q: int, n_folds: int, rng: Rng):
    """Index folds over the pooled set, stratified by class.

    Retries the shuffle up to 10 times if any fold ends up single-class
    (only possible when a class has fewer members than folds).
    """
    stream = rng.stream(f"cv-folds/{n_p}/{n_q}/{n_folds}")
    for _ in range(10):
        perm_p = stream.permutation(n_p)
        perm_q = n_p + stream.permutation(n_q)
        folds = []
        ok = True
        for i in range(n_folds):
            fold = np.concatenate([perm_p[i::n_folds], perm_q[i::n_folds]])
            if len(perm_p[i::n_folds]) == 0 or len(perm_q[i::n_folds]) == 0:
                ok = False
            folds.append(np.sort(fold))
        if ok:
            return folds
    raise ValueError(
        f"cannot build {n_folds} two-class folds from {n_p} P and {n_q} Q points")


def cross_validate_alpha(samples: SampleSet, loss: CompositeLoss,
                         kernel: KernelSpec,
                         alphas: Sequence[float] = (10.0, 0.1, 1e-3),
                         n_folds: int = 5, rng: Optional[Rng] = None,
                         max_iter: int = 100) -> tuple[float, list]:
    """K-fold selection of alpha by held-out unpenalized risk.

    Folds are stratified by class; ties go to the smaller alpha.
    Returns (chosen alpha, [(alpha, mean held-out risk), ...]).
    """
    rng = rng or Rng(0)
    pooled = samples.pooled
    labels = samples.labels
    n_p = len(samples.xs_p)
    folds = _stratified_folds(n_p, len(labels) - n_p, n_folds, rng)
    all_idx = np.arange(len(labels))

    table = []
    for alpha in alphas:
        held_out = []
        for fold in folds:
            train = np.setdiff1d(all_idx, fold)
            tr_labels = labels[train]
            tr = SampleSet(xs_p=pooled[train[tr_labels > 0]],
                           xs_q=pooled[train[tr_labels < 0]])
            model = fit(tr, loss, kernel, alpha, max_iter=max_iter,
                        clamp_budget=None)
            scores = model.scores(pooled[fold])
            va_labels = labels[fold]
            pos = va_labels > 0
            risk = (float(np.sum(loss.ell_pos(scores[pos]))) +
                    float(np.sum(loss.ell_neg(scores[~pos])))) / len(fold)
            held_out.append(risk)
        table.append((float(alpha), float(np.mean(held_out))))
    chosen = _select_alpha([a for a, _ in table], [r for _, r in table])
    return chosen, table


def _softplus(t: float) -> float:
    return float(np.logaddexp(0.0, t))


def _sigmoid(t: float) -> float:
    return float(0.5 * (1.0 + np.tanh(0.5 * t)))


@dataclass
class PopulationFit:
    theta: np.ndarray  # (curvature, intercept), intercept > 0
    divergence: float
    status: str
    iterations: int

    def beta_hat(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.theta[0] * x ** 2 + self.theta[1]


def population_fit_parametric(gen: BregmanGenerator,
                              spec: PiecewisePairSpec,
                              quad_nodes: int = 2001,
                              max_iter: int = 300,
                              grad_tol: float = 1e-10,
                              theta0: tuple[float, float] = (1.0, 1.0)) -> PopulationFit:
    """Infinite-sample fit of beta_hat(x) = t1 x^2 + t2 on a piecewise pair.

    Minimizes the Q-averaged divergence to the exact ratio by quadrature,
    piece by piece so the integrand stays smooth.  The intercept is kept
    positive through a softplus reparameterization; ratio evaluations are
    floored at the generator's domain floor with a flat (zero-gradient)
    extension below it.
    """
    if quad_nodes < 3 or quad_nodes % 2 == 0:
        raise ValueError("quad_nodes must be odd and >= 3")
    edges = spec.edges
    p_levels = np.asarray(spec.p_levels)
    q_levels = np.asarray(spec.q_levels)
    eps = gen.domain_eps

    pieces = []
    for i in range(len(q_levels)):
        xs = np.linspace(edges[i], edges[i + 1], quad_nodes)
        h = (edges[i + 1] - edges[i]) / (quad_nodes - 1)
        w = np.ones(quad_nodes)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        pieces.append((xs, w, p_levels[i] / q_levels[i], q_levels[i]))

    def obj(z):
        t1, tau = z
        t2 = _softplus(tau)
        value = 0.0
        g1 = 0.0
        g2 = 0.0
        for xs, w, beta_level, q_level in pieces:
            bh = t1 * xs ** 2 + t2
            inside = bh > eps
            bh_c = np.maximum(bh, eps)
            value += q_level * float(w @ bregman_term(gen, beta_level, bh_c))
            dd = -gen.phi2(bh_c) * (beta_level - bh_c) * inside
            g1 += q_level * float(w @ (dd * xs ** 2))
            g2 += q_level * float(w @ dd)
        return value, np.array([g1, g2 * _sigmoid(tau)])

    t2_0 = float(theta0[1])
    if t2_0 <= 0:
        raise ValueError("initial intercept must be positive")
    tau0 = float(np.log(np.expm1(t2_0)))
    res = bfgs(obj, np.array([float(theta0[0]), tau0]),
               max_iter=max_iter, grad_tol=grad_tol)
    theta = np.array([res.x_star[0], _softplus(res.x_star[1])])
    return PopulationFit(theta=theta, divergence=res.f_star,
                         status=res.status, iterations=res.iterations)


def sup_error(beta_hat: Callable[[np.ndarray], np.ndarray],
              spec: PiecewisePairSpec, lo: float, hi: float,
              n_grid: int = 2001) -> float:
    """Largest |beta_hat - beta| over a uniform grid on [lo, hi]."""
    xs = np.linspace(lo, hi, n_grid)
    return float(np.max(np.abs(np.asarray(beta_hat(xs), dtype=float)
                               - piecewise_beta(spec, xs))))
