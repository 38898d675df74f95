"""Exact finite-sample distribution of a standardized U-statistic.

For a finite-support distribution and small n, every outcome tuple in
``support^n`` is enumerated (mixed-radix order, vectorized in chunks), so
the law of S and all cross moments between the linear part and the
degenerate component sums are exact up to rounding.  This is the ground
truth used to validate the analytic moment formulas and every Monte Carlo
estimator in the package.

Two independent evaluation routes are kept deliberately separate:

* moment functionals (beta, gamma, kappa) come from ``support^p`` sums via
  the decomposition machinery;
* ``e_tt_full``, ``cov_l_t`` and friends come from evaluating L and T on
  every one of the ``support^n`` tuples.

Their agreement is an end-to-end check of the decomposition algebra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import hoeffding, model
from .approx import (
    AdjustedNormal,
    adjusted_cdf,
    edgeworth_cdf_order2,
    normal_cdf,
    step_function_distance,
)
from .errors import BudgetError, InsufficientSample, ValidationError
from .model import FiniteDiscrete, Kernel

DEFAULT_TUPLE_BUDGET = 10**7

_GROUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ExactReport:
    """Exact law and moment functionals for one (kernel, dist, n) triple."""

    kernel_id: str
    dist_id: str
    n: int
    alpha: float
    theta: float
    sigma_g: float
    s_atoms: np.ndarray
    s_probs: np.ndarray
    u_atoms: np.ndarray
    u_probs: np.ndarray
    beta: float
    gamma: float
    gamma_components: tuple[float, ...]
    gamma_alpha: float
    gamma_alpha_components: tuple[float, ...]
    kappa: tuple[float, ...]
    e_gg_eta: Optional[float]
    e_g3: float
    mean_s: float
    var_s: float
    e_tt_full: float
    cov_l_t: float
    component_cross: dict[tuple[int, int], float]
    linear_component_cross: dict[int, float]
    power_cross: dict[int, float]
    prob_total: float
    dist_phi: float
    dist_adjusted: float
    dist_edgeworth2: Optional[float]

    def distance_to(self, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
        """Kolmogorov distance from the exact law of S to ``cdf``."""
        return step_function_distance(self.s_atoms, np.cumsum(self.s_probs), cdf)

    def to_json(self) -> dict:
        return {
            "kernel": self.kernel_id,
            "dist": self.dist_id,
            "n": self.n,
            "alpha": self.alpha,
            "theta": self.theta,
            "sigma_g": self.sigma_g,
            "s_atoms": self.s_atoms.tolist(),
            "s_probs": self.s_probs.tolist(),
            "u_atoms": self.u_atoms.tolist(),
            "u_probs": self.u_probs.tolist(),
            "beta": self.beta,
            "gamma": self.gamma,
            "gamma_components": list(self.gamma_components),
            "gamma_alpha": self.gamma_alpha,
            "gamma_alpha_components": list(self.gamma_alpha_components),
            "kappa": list(self.kappa),
            "e_gg_eta": self.e_gg_eta,
            "e_g3": self.e_g3,
            "mean_s": self.mean_s,
            "var_s": self.var_s,
            "e_tt_full": self.e_tt_full,
            "cov_l_t": self.cov_l_t,
            "component_cross": {f"{p},{q}": v for (p, q), v in self.component_cross.items()},
            "linear_component_cross": {str(p): v for p, v in self.linear_component_cross.items()},
            "power_cross": {str(p): v for p, v in self.power_cross.items()},
            "prob_total": self.prob_total,
            "dist_phi": self.dist_phi,
            "dist_adjusted": self.dist_adjusted,
            "dist_edgeworth2": self.dist_edgeworth2,
        }


def _group_atoms(values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge numerically equal outcome values, summing their weights."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    if v.size == 0:
        raise ValidationError("no outcomes to group")
    tol = _GROUP_TOL * (1.0 + np.maximum(np.abs(v[1:]), np.abs(v[:-1])))
    new_group = np.concatenate(([True], np.diff(v) > tol))
    starts = np.flatnonzero(new_group)
    probs = np.add.reduceat(w, starts)
    # Representative value: probability-weighted mean of each group.
    sums = np.add.reduceat(v * w, starts)
    return sums / probs, probs


def _enumerate_tuples(dist: FiniteDiscrete, n: int, budget: int):
    """Yield (values, weights) chunks covering support^n in mixed-radix order."""
    s = dist.atoms.size
    total = s**n
    if total > budget:
        raise BudgetError(f"{s}^{n} = {total} tuples exceeds budget {budget}")
    chunk = max(1, min(total, 2_000_000 // max(n, 1)))
    powers = s ** np.arange(n, dtype=np.int64)
    for lo in range(0, total, chunk):
        hi = min(total, lo + chunk)
        idx = np.arange(lo, hi, dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % s
        yield dist.atoms[digits], dist.probs[digits].prod(axis=1)


def exact_u_distribution(
    kernel: Kernel,
    dist: FiniteDiscrete,
    n: int,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact law of the raw U-statistic: ``(u_atoms, u_probs, theta)``.

    No standardization is involved, so this stays well defined for
    degenerate configurations where :func:`exact_distribution` refuses.
    """
    if not isinstance(dist, FiniteDiscrete):
        raise ValidationError("exact enumeration requires finite support")
    k = kernel.order
    if n < k:
        raise InsufficientSample("n must be >= kernel order")
    comb_nk = math.comb(n, k)
    k_subsets = list(itertools.combinations(range(n), k))
    u_parts: list[np.ndarray] = []
    w_parts: list[np.ndarray] = []
    theta_parts: list[float] = []
    for vals, w in _enumerate_tuples(dist, n, budget):
        u_rows = np.zeros(vals.shape[0])
        for combo in k_subsets:
            u_rows += model.kernel_values(kernel, [vals[:, c] for c in combo])
        u_rows /= comb_nk
        u_parts.append(u_rows)
        w_parts.append(w)
        theta_parts.append(float(np.dot(u_rows, w)))
    u_atoms, u_probs = _group_atoms(np.concatenate(u_parts), np.concatenate(w_parts))
    return u_atoms, u_probs, math.fsum(theta_parts)


def exact_distribution(
    kernel: Kernel,
    dist: FiniteDiscrete,
    n: int,
    alpha: float = 2.0,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> ExactReport:
    """Enumerate ``support^n`` and report the exact law of S with moments."""
    if not isinstance(dist, FiniteDiscrete):
        raise ValidationError("exact enumeration requires finite support")
    k = kernel.order
    if n < k:
        raise InsufficientSample("n must be >= kernel order")

    d = hoeffding.decompose(kernel, dist, n, strategy="exact")
    proj = d.projection
    theta = d.theta
    sigma_g = d.sigma_g
    s_scale = math.sqrt(n) / (k * sigma_g)
    comb_nk = math.comb(n, k)
    subsets = {p: list(itertools.combinations(range(n), p)) for p in range(2, k + 1)}
    k_subsets = list(itertools.combinations(range(n), k))

    s_vals_parts: list[np.ndarray] = []
    w_parts: list[np.ndarray] = []
    acc: dict[str, list[float]] = {key: [] for key in (
        "w", "s1", "s2", "l1", "l2", "t1", "t2", "lt",
    )}
    cross_acc: dict[tuple[int, int], list[float]] = {
        (p, q): [] for p in range(2, k + 1) for q in range(p + 1, k + 1)
    }
    lcross_acc: dict[int, list[float]] = {p: [] for p in range(2, k + 1)}
    power_acc: dict[int, list[float]] = {p: [] for p in range(2, k + 1)}

    for vals, w in _enumerate_tuples(dist, n, budget):
        rows = vals.shape[0]
        u_rows = np.zeros(rows)
        for combo in k_subsets:
            u_rows += model.kernel_values(kernel, [vals[:, c] for c in combo])
        u_rows /= comb_nk
        s_rows = s_scale * (u_rows - theta)

        g_flat = proj.g_values(vals.ravel()).reshape(vals.shape)
        l_rows = g_flat.sum(axis=1) * d.l_scale

        t_p_rows: dict[int, np.ndarray] = {}
        for p in range(2, k + 1):
            tp = np.zeros(rows)
            for combo in subsets[p]:
                tp += proj.component_values(p, [vals[:, c] for c in combo])
            t_p_rows[p] = tp * d.t_scale(p)
        t_rows = sum(t_p_rows.values()) if t_p_rows else np.zeros(rows)

        s_vals_parts.append(s_rows)
        w_parts.append(w)
        acc["w"].append(float(np.sum(w)))
        acc["s1"].append(float(np.dot(s_rows, w)))
        acc["s2"].append(float(np.dot(s_rows**2, w)))
        acc["l1"].append(float(np.dot(l_rows, w)))
        acc["l2"].append(float(np.dot(l_rows**2, w)))
        acc["t1"].append(float(np.dot(t_rows, w)))
        acc["t2"].append(float(np.dot(t_rows**2, w)))
        acc["lt"].append(float(np.dot(l_rows * t_rows, w)))
        for (p, q), parts in cross_acc.items():
            parts.append(float(np.dot(t_p_rows[p] * t_p_rows[q], w)))
        for p, parts in lcross_acc.items():
            parts.append(float(np.dot(l_rows * t_p_rows[p], w)))
        for p, parts in power_acc.items():
            parts.append(float(np.dot(l_rows**p * t_rows, w)))

    prob_total = math.fsum(acc["w"])
    mean_s = math.fsum(acc["s1"])
    var_s = math.fsum(acc["s2"]) - mean_s**2
    mean_l = math.fsum(acc["l1"])
    mean_t = math.fsum(acc["t1"])
    e_tt_full = math.fsum(acc["t2"])
    cov_l_t = math.fsum(acc["lt"]) - mean_l * mean_t
    component_cross = {pq: math.fsum(parts) for pq, parts in cross_acc.items()}
    linear_component_cross = {p: math.fsum(parts) for p, parts in lcross_acc.items()}
    power_cross = {p: math.fsum(parts) for p, parts in power_acc.items()}

    s_atoms, s_probs = _group_atoms(np.concatenate(s_vals_parts), np.concatenate(w_parts))
    u_atoms = theta + s_atoms / s_scale
    u_probs = s_probs

    summary = hoeffding.moment_summary(d, alpha=alpha)
    kappa_vec = summary.kappa

    cum = np.cumsum(s_probs)
    dist_phi = step_function_distance(s_atoms, cum, normal_cdf)
    adj = AdjustedNormal(kappa=kappa_vec)
    dist_adjusted = step_function_distance(s_atoms, cum, lambda x: adjusted_cdf(adj, x))

    e_gg_eta: Optional[float] = None
    dist_edgeworth2: Optional[float] = None
    if k == 2:
        e_gg_eta = hoeffding._tuple_expectation_exact(
            dist,
            2,
            lambda cols: proj.g_values(cols[0])
            * proj.g_values(cols[1])
            * proj.component_values(2, cols),
        )
        dist_edgeworth2 = step_function_distance(
            s_atoms,
            cum,
            lambda x: edgeworth_cdf_order2(e_gg_eta, _e_g3(proj, dist), sigma_g, n, x),
        )
    e_g3 = _e_g3(proj, dist)

    return ExactReport(
        kernel_id=kernel.ident,
        dist_id=dist.ident,
        n=n,
        alpha=alpha,
        theta=theta,
        sigma_g=sigma_g,
        s_atoms=s_atoms,
        s_probs=s_probs,
        u_atoms=u_atoms,
        u_probs=u_probs,
        beta=summary.beta,
        gamma=summary.gamma,
        gamma_components=summary.gamma_components,
        gamma_alpha=summary.gamma_alpha,
        gamma_alpha_components=summary.gamma_alpha_components,
        kappa=kappa_vec,
        e_gg_eta=e_gg_eta,
        e_g3=e_g3,
        mean_s=mean_s,
        var_s=var_s,
        e_tt_full=e_tt_full,
        cov_l_t=cov_l_t,
        component_cross=component_cross,
        linear_component_cross=linear_component_cross,
        power_cross=power_cross,
        prob_total=prob_total,
        dist_phi=dist_phi,
        dist_adjusted=dist_adjusted,
        dist_edgeworth2=dist_edgeworth2,
    )


def _e_g3(proj: hoeffding.ProjectionSet, dist: FiniteDiscrete) -> float:
    g = proj.g_values(dist.atoms)
    return float(np.dot(g**3, dist.probs))
