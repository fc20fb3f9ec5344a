"""Reference experiments: population fits, small-sample explosion, and
importance-weighted regression under covariate shift.

These drivers back the fig1/fig2/fig3 CLI commands and the acceptance
tests; they only use the public library API.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dre import (PopulationFit, SampleSet, fit, kulsif_fit_closed_form,
                  population_fit_parametric, predict_ratio, sup_error)
from .generators import builtin_generator
from .kernels import KernelSpec, median_heuristic
from .losses import family_loss
from .quadrature import simpson_nodes, simpson_weights
from .synth import (PiecewisePairSpec, RegressionTask, Rng, default_pair,
                    gaussian_pair, piecewise_beta, regression_task,
                    target_function)
from .iw import WeightedRegressionTask, krr_predictor, weighted_krr

FIGURE1_FAMILIES = ("lr", "kulsif", "poly1", "poly6", "ew")

_FIG1_GENS = {
    "lr": lambda: builtin_generator("lr"),
    "kulsif": lambda: builtin_generator("kulsif"),
    "poly1": lambda: builtin_generator("poly", k=1.0),
    "poly6": lambda: builtin_generator("poly", k=6.0),
    "ew": lambda: builtin_generator("ew"),
}


def figure1(spec: Optional[PiecewisePairSpec] = None, quad_nodes: int = 2001,
            max_iter: int = 400, sup_interval: tuple[float, float] = (0.9, 1.0)):
    """Population parametric fits for each divergence family.

    Returns {"fits": name -> PopulationFit, "sup_errors": name -> float,
    "families": tuple}; sup errors are taken over sup_interval, inside
    the pair's large-ratio region.
    """
    spec = spec or default_pair()
    fits = {}
    sups = {}
    for name in FIGURE1_FAMILIES:
        pf = population_fit_parametric(_FIG1_GENS[name](), spec,
                                       quad_nodes=quad_nodes, max_iter=max_iter)
        fits[name] = pf
        sups[name] = sup_error(pf.beta_hat, spec, *sup_interval)
    return {"fits": fits, "sup_errors": sups, "families": FIGURE1_FAMILIES}


@dataclass
class Fig2Cell:
    family: str
    size: int
    alpha: float
    max_abs: list  # one entry per seed replicate
    median_max_abs: float
    curve: np.ndarray  # beta_hat of replicate 0 on the grid


def figure2(seed: int = 0, sizes: Sequence[int] = (10, 100),
            alphas: Sequence[float] = (1e-6, 1e-4, 1e-2, 1.0),
            families: Sequence[str] = ("kulsif", "ew"),
            n_seeds: int = 10, grid_lo: float = -3.0, grid_hi: float = 3.0,
            grid_n: int = 241, max_iter: int = 200):
    """Small-sample ratio fits on the Gaussian pair across (size, alpha).

    kulsif is solved in closed form (its exact minimizer is the object
    of interest); ew is fitted by BFGS.  Reports max |beta_hat| on the
    evaluation grid per replicate.
    """
    sampler, exact_beta = gaussian_pair()
    grid = np.linspace(grid_lo, grid_hi, grid_n)
    cells = []
    for family in families:
        for size in sizes:
            n = size // 2
            m = size - n
            for alpha in alphas:
                maxima = []
                curve0 = None
                for rep in range(n_seeds):
                    rng = Rng(seed)
                    tag = f"fig2/{family}/{size}/{alpha:g}/{rep}"
                    samples = SampleSet(
                        xs_p=sampler("p", n, rng, name=f"{tag}/p"),
                        xs_q=sampler("q", m, rng, name=f"{tag}/q"))
                    sigma = median_heuristic(samples.pooled)
                    kernel = KernelSpec(kind="gaussian", sigma=sigma)
                    if family == "kulsif":
                        model = kulsif_fit_closed_form(samples, kernel, alpha)
                    else:
                        model = fit(samples, family_loss(family), kernel,
                                    alpha, max_iter=max_iter, family=family)
                    bh = predict_ratio(model, grid)
                    maxima.append(float(np.max(np.abs(bh))))
                    if rep == 0:
                        curve0 = bh
                cells.append(Fig2Cell(family=family, size=size,
                                      alpha=float(alpha), max_abs=maxima,
                                      median_max_abs=float(np.median(maxima)),
                                      curve=curve0))
    return {"cells": cells, "grid": grid, "exact_beta": exact_beta(grid)}


def _l2_sq_piecewise(f_vals_fn, spec: PiecewisePairSpec, which: str,
                     n_nodes: int = 10001) -> float:
    """Squared L^2(mu) distance of a predictor from the target function,
    integrated piece by piece against the piecewise density mu."""
    levels = {"p": spec.p_levels, "q": spec.q_levels}[which]
    edges = spec.edges
    total = 0.0
    for i, level in enumerate(levels):
        xs = simpson_nodes(edges[i], edges[i + 1], n_nodes)
        w = simpson_weights(edges[i], edges[i + 1], n_nodes)
        resid = np.asarray(f_vals_fn(xs), dtype=float) - target_function(xs)
        total += level * float(w @ resid ** 2)
    return total


def figure3(seed: int = 0, spec: Optional[PiecewisePairSpec] = None,
            n_src: int = 200, n_tgt: int = 200, noise_sigma: float = 0.1,
            degree: int = 5, alpha: float = 1e-32, quad_nodes: int = 2001,
            max_iter: int = 400, l2_nodes: int = 10001):
    """Importance-weighted polynomial regression under covariate shift.

    Source inputs are drawn from Q, but errors are judged under both P
    and Q.  Weightings compared: uniform, the exact ratio, and the two
    population ratio estimates (ew and lr) from figure1's parametric
    family.
    """
    spec = spec or default_pair()
    rng = Rng(seed)
    task = regression_task(spec, n_src, n_tgt, noise_sigma, rng,
                           name=f"fig3/{seed}")
    pop = {
        name: population_fit_parametric(_FIG1_GENS[name](), spec,
                                        quad_nodes=quad_nodes,
                                        max_iter=max_iter)
        for name in ("ew", "lr")
    }
    src = task.src_xs
    weightings = {
        "uniform": np.ones(n_src),
        "exact": piecewise_beta(spec, src),
        "ew": np.maximum(pop["ew"].beta_hat(src), 0.0),
        "lr": np.maximum(pop["lr"].beta_hat(src), 0.0),
    }
    kernel = KernelSpec(kind="polynomial", degree=degree)
    predictors = {}
    l2p_sq = {}
    l2q_sq = {}
    for name, w in weightings.items():
        wtask = WeightedRegressionTask(xs=src, ys=task.src_ys, weights=w,
                                       kernel=kernel, alpha=alpha)
        predictors[name] = krr_predictor(wtask, weighted_krr(wtask))
        l2p_sq[name] = _l2_sq_piecewise(predictors[name], spec, "p", l2_nodes)
        l2q_sq[name] = _l2_sq_piecewise(predictors[name], spec, "q", l2_nodes)
    return {"task": task, "population_fits": pop, "weightings": weightings,
            "predictors": predictors, "l2p_sq": l2p_sq, "l2q_sq": l2q_sq}
