"""Hoeffding decomposition of U-statistics and its moment functionals.

For a symmetric kernel h of order k with mean theta, the marginal kernels
are ``h_p(x_1..x_p) = E h(x_1..x_p, X_(p+1)..X_k)`` and the degenerate
components follow by inclusion-exclusion:

    t_p(x_1..x_p) = sum over B subset of {1..p} of (-1)^(p-|B|) h_|B|(x_B).

Writing g = t_1 and sigma_g^2 = var g(X), the standardized statistic

    S = sqrt(n) (U_n - theta) / (k sigma_g)

splits as S = L + T where L sums the scaled linear terms
``L_i = g(X_i) / (sqrt(n) sigma_g)`` (so var L = 1) and T collects the
scaled degenerate components of orders 2..k:

    T_(i_1..i_p) = sqrt(n) C(k,p) t_p(X_(i_1)..X_(i_p)) / (k sigma_g C(n,p)).

Moment functionals of the split:

* ``beta``  = n E|L_1|^3, the scaled third absolute moment of one linear term;
* ``gamma`` = var T = sum_p C(n,p) E T_(1..p)^2;
* ``gamma_alpha`` replaces the square by an alpha-th absolute power;
* ``kappa_p`` = C(n,p) E[L_1 .. L_p T_(1..p)], the aligned cross moment
  between the linear part and the order-p component (degeneracy kills every
  non-aligned term in E[L_1..L_p T]).

Three evaluation strategies are supported: exact summation over finite
support, closed forms for kernels whose degenerate part is a scaled product
``coef * (x - mu)(y - mu)``, and nested Monte Carlo with common random
numbers for the inner conditional expectations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import model
from .errors import (
    BudgetError,
    DegenerateKernel,
    InsufficientSample,
    ValidationError,
)
from .model import Continuous, Distribution, FiniteDiscrete, Kernel

MAX_DECOMPOSE_ORDER = 5
DEGENERACY_RATIO = 1e-12
DEFAULT_INNER_REPS = 10_000
DEFAULT_SUBSET_BUDGET = model.DEFAULT_SUBSET_BUDGET

# On finite support the nested plug-in draws (theta, sigma_g, inner pool)
# cost O(atoms) per draw batch via multinomial counts, so they get many more
# draws than the outer loop; this keeps the reported standard errors honest,
# since they only track the outer-loop noise.
PLUGIN_DRAW_FACTOR = 4096

# Stream indices reserved for internal draws so they never collide with
# experiment replicate streams (which use small nonnegative integers).
STREAM_INNER = 1 << 40
STREAM_THETA = (1 << 40) + 1
STREAM_SIGMA = (1 << 40) + 2
STREAM_MOMENT_BASE = 1 << 41

_CHUNK_CELLS = 4_000_000


# ---------------------------------------------------------------------------
# Closed forms for separable degenerate parts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparableForms:
    """Closed-form pieces for order-2 kernels with t_2 = coef*(x-mu)(y-mu)."""

    theta: float
    mu: float
    g_fn: Callable[[np.ndarray], np.ndarray]
    t2_coef: float
    var_g: float
    var_h: float
    e_g3: float
    e_g_centered: float


def separable_forms(kernel: Kernel, dist: Distribution) -> Optional[SeparableForms]:
    """Return closed forms when the kernel family supports them, else None."""
    if kernel.order != 2:
        return None
    base = kernel.ident.split(":", 1)[0]
    if base not in ("variance", "product", "quadratic"):
        return None
    mu = model.mean(dist)
    s2 = model.variance(dist)
    m3 = model.central_moment(dist, 3)
    m4 = model.central_moment(dist, 4)
    if base == "variance":
        m6 = model.central_moment(dist, 6)
        return SeparableForms(
            theta=s2,
            mu=mu,
            g_fn=lambda x: 0.5 * (np.square(x - mu) - s2),
            t2_coef=-1.0,
            var_g=0.25 * (m4 - s2 * s2),
            var_h=0.5 * m4 + 0.5 * s2 * s2,
            e_g3=0.125 * (m6 - 3.0 * s2 * m4 + 2.0 * s2**3),
            e_g_centered=0.5 * m3,
        )
    if base == "product":
        raw2 = s2 + mu * mu
        return SeparableForms(
            theta=mu * mu,
            mu=mu,
            g_fn=lambda x: mu * (x - mu),
            t2_coef=1.0,
            var_g=mu * mu * s2,
            var_h=raw2 * raw2 - mu**4,
            e_g3=mu**3 * m3,
            e_g_centered=mu * s2,
        )
    eps = kernel.params["eps"]
    c1 = 0.5 + eps * mu
    raw2 = s2 + mu * mu
    theta = mu + eps * mu * mu
    var_h = 0.5 * (raw2 + mu * mu) + 2.0 * eps * mu * raw2 + eps * eps * raw2 * raw2 - theta * theta
    return SeparableForms(
        theta=theta,
        mu=mu,
        g_fn=lambda x: c1 * (x - mu),
        t2_coef=eps,
        var_g=c1 * c1 * s2,
        var_h=var_h,
        e_g3=c1**3 * m3,
        e_g_centered=c1 * s2,
    )


# ---------------------------------------------------------------------------
# Projection strategies
# ---------------------------------------------------------------------------

def _atom_grid(dist: FiniteDiscrete, p: int) -> tuple[list[np.ndarray], np.ndarray]:
    """Product grid over atoms^p as ravelled columns plus cell weights."""
    cols = [g.ravel() for g in np.meshgrid(*([dist.atoms] * p), indexing="ij")]
    w = np.prod(np.meshgrid(*([dist.probs] * p), indexing="ij"), axis=0).ravel()
    return cols, w


def _count_stats(counts: np.ndarray, vals: np.ndarray) -> tuple[float, float, float]:
    """Mean, ddof=1 variance, and SE of the mean from multinomial cell counts."""
    m = int(counts.sum())
    vals = np.asarray(vals, dtype=float)
    mean = float(np.dot(counts, vals) / m)
    var = float(np.dot(counts, np.square(vals - mean)) / (m - 1))
    var = max(var, 0.0)
    return mean, var, math.sqrt(var / m)


def _weighted_marginal(
    kernel: Kernel,
    cols: Sequence[np.ndarray],
    tail_cols: Sequence[np.ndarray],
    weights: np.ndarray,
) -> np.ndarray:
    """E over the tail coordinates, vectorized over the leading columns."""
    lead = [np.asarray(c, dtype=float) for c in cols]
    n_pts = lead[0].size
    n_tail = weights.size
    out = np.empty(n_pts)
    step = max(1, _CHUNK_CELLS // max(1, n_tail))
    for lo in range(0, n_pts, step):
        hi = min(n_pts, lo + step)
        args = [c[lo:hi, None] for c in lead] + [t[None, :] for t in tail_cols]
        out[lo:hi] = model.kernel_values(kernel, args) @ weights
    return out


class ProjectionSet:
    """Marginal kernels h_p and degenerate components t_p for one pair.

    ``strategy`` is one of ``"exact"`` (finite support), ``"analytic"``
    (separable closed forms), or ``"monte-carlo"`` (nested integration with
    ``inner_reps`` common-random-number draws shared by every evaluation).
    """

    def __init__(
        self,
        kernel: Kernel,
        dist: Distribution,
        strategy: str = "auto",
        inner_reps: int = DEFAULT_INNER_REPS,
        seed: int = 0,
    ) -> None:
        if kernel.order > MAX_DECOMPOSE_ORDER:
            raise ValidationError(
                f"decomposition supports kernel order <= {MAX_DECOMPOSE_ORDER}"
            )
        if strategy == "auto":
            if isinstance(dist, FiniteDiscrete):
                strategy = "exact"
            elif separable_forms(kernel, dist) is not None:
                strategy = "analytic"
            else:
                strategy = "monte-carlo"
        if strategy not in ("exact", "analytic", "monte-carlo"):
            raise ValidationError(f"unknown strategy {strategy!r}")
        if strategy == "exact" and not isinstance(dist, FiniteDiscrete):
            raise ValidationError("exact strategy requires finite support")
        self.kernel = kernel
        self.dist = dist
        self.strategy = strategy
        self.inner_reps = int(inner_reps)
        self.seed = int(seed)
        self.forms: Optional[SeparableForms] = None
        k = kernel.order
        if strategy == "analytic":
            forms = separable_forms(kernel, dist)
            if forms is None:
                raise ValidationError(
                    f"no analytic forms for kernel {kernel.ident!r} under {dist.ident!r}"
                )
            self.forms = forms
            self.theta = forms.theta
            self.var_g = forms.var_g
            self.var_h = forms.var_h
        elif strategy == "exact":
            self._tail = dist.atoms
            self._tail_probs = dist.probs
            self.theta = self._exact_mean_over(k, lambda cols: model.kernel_values(kernel, cols))
            g2 = self._exact_mean_over(1, lambda cols: np.square(self._g_exact(cols[0])))
            h2 = self._exact_mean_over(k, lambda cols: np.square(model.kernel_values(kernel, cols)))
            self.var_g = g2
            self.var_h = h2 - self.theta**2
        elif isinstance(dist, FiniteDiscrete):
            if self.inner_reps < 2:
                raise ValidationError("monte-carlo strategy needs inner_reps >= 2")
            m_plug = self.inner_reps * PLUGIN_DRAW_FACTOR
            tail_max = max(1, k - 1)
            _, pool_w = _atom_grid(dist, tail_max)
            pool_counts = model.stream_generator(seed, STREAM_INNER).multinomial(
                m_plug, pool_w
            )
            self._pool_freq = pool_counts.astype(float).reshape(
                (dist.atoms.size,) * tail_max
            ) / m_plug
            grid_k, w_k = _atom_grid(dist, k)
            theta_counts = model.stream_generator(seed, STREAM_THETA).multinomial(
                m_plug, w_k
            )
            h_vals = model.kernel_values(kernel, grid_k)
            self.theta, var_h, self.theta_se = _count_stats(theta_counts, h_vals)
            sigma_counts = model.stream_generator(seed, STREAM_SIGMA).multinomial(
                m_plug, dist.probs
            )
            g_vals = self.g_values(dist.atoms)
            _, self.var_g, _ = _count_stats(sigma_counts, g_vals)
            self.var_h = var_h
        else:
            if self.inner_reps < 2:
                raise ValidationError("monte-carlo strategy needs inner_reps >= 2")
            self._inner = np.column_stack(
                [
                    model.sample(dist, self.inner_reps, self.seed, STREAM_INNER + j)
                    for j in range(max(1, k - 1))
                ]
            )
            theta_draws = model.kernel_values(
                kernel,
                [
                    model.sample(dist, self.inner_reps, self.seed, STREAM_THETA + j)
                    for j in range(k)
                ],
            )
            self.theta = float(np.mean(theta_draws))
            self.theta_se = float(np.std(theta_draws, ddof=1) / math.sqrt(self.inner_reps))
            sigma_x = model.sample(dist, self.inner_reps, self.seed, STREAM_SIGMA)
            g_draws = self.g_values(sigma_x)
            self.var_g = float(np.var(g_draws, ddof=1))
            self.var_h = float(np.var(theta_draws, ddof=1))

    # -- evaluation ---------------------------------------------------------

    def _g_exact(self, x: np.ndarray) -> np.ndarray:
        k = self.kernel.order
        if k == 1:
            return model.kernel_values(self.kernel, [x]) - self.theta
        grid = [g.ravel() for g in np.meshgrid(*([self._tail] * (k - 1)), indexing="ij")]
        w = np.prod(
            np.meshgrid(*([self._tail_probs] * (k - 1)), indexing="ij"), axis=0
        ).ravel()
        return _weighted_marginal(self.kernel, [x], grid, w) - self.theta

    def _exact_mean_over(self, p: int, f: Callable[[list[np.ndarray]], np.ndarray]) -> float:
        cols = [g.ravel() for g in np.meshgrid(*([self._tail] * p), indexing="ij")]
        w = np.prod(np.meshgrid(*([self._tail_probs] * p), indexing="ij"), axis=0).ravel()
        return float(np.dot(np.asarray(f(cols), dtype=float), w))

    def marginal_values(self, p: int, cols: Sequence[np.ndarray]) -> np.ndarray:
        """h_p on parallel argument columns."""
        k = self.kernel.order
        if not 0 <= p <= k:
            raise ValidationError(f"marginal order must lie in [0, {k}]")
        cols = [np.asarray(c, dtype=float) for c in cols]
        if len(cols) != p:
            raise ValidationError(f"expected {p} columns, got {len(cols)}")
        if p == 0:
            return np.full(1, self.theta)
        if p == k:
            return model.kernel_values(self.kernel, cols)
        if self.strategy == "analytic":
            forms = self.forms
            assert forms is not None and k == 2 and p == 1
            return forms.g_fn(cols[0]) + forms.theta
        if self.strategy == "exact":
            tail = k - p
            grid = [g.ravel() for g in np.meshgrid(*([self._tail] * tail), indexing="ij")]
            w = np.prod(
                np.meshgrid(*([self._tail_probs] * tail), indexing="ij"), axis=0
            ).ravel()
            return _weighted_marginal(self.kernel, cols, grid, w)
        grid, w = self._pool_for_tail(k - p)
        return _weighted_marginal(self.kernel, cols, grid, w)

    def _pool_for_tail(self, tail: int) -> tuple[list[np.ndarray], np.ndarray]:
        """Inner integration pool for a tail of ``tail`` arguments."""
        dist = self.dist
        if isinstance(dist, FiniteDiscrete):
            freq = self._pool_freq
            while freq.ndim > tail:
                freq = freq.sum(axis=-1)
            cols = [
                g.ravel() for g in np.meshgrid(*([dist.atoms] * tail), indexing="ij")
            ]
            return cols, freq.ravel()
        grid = [self._inner[:, j] for j in range(tail)]
        return grid, np.full(self.inner_reps, 1.0 / self.inner_reps)

    def marginal(self, p: int, points: Sequence[float]) -> float:
        pts = [np.asarray([float(v)]) for v in points]
        return float(self.marginal_values(p, pts)[0])

    def g_values(self, x: np.ndarray) -> np.ndarray:
        """Linear projection g = h_1 - theta on an array of points."""
        if self.strategy == "analytic":
            assert self.forms is not None
            return np.asarray(self.forms.g_fn(np.asarray(x, dtype=float)), dtype=float)
        return self.marginal_values(1, [x]) - self.theta

    def component_values(self, p: int, cols: Sequence[np.ndarray]) -> np.ndarray:
        """Degenerate component t_p on parallel argument columns."""
        k = self.kernel.order
        if not 1 <= p <= k:
            raise ValidationError(f"component order must lie in [1, {k}]")
        cols = [np.asarray(c, dtype=float) for c in cols]
        if len(cols) != p:
            raise ValidationError(f"expected {p} columns, got {len(cols)}")
        if p == 1:
            return self.g_values(cols[0])
        if self.strategy == "analytic" and p == 2:
            forms = self.forms
            assert forms is not None
            return forms.t2_coef * (cols[0] - forms.mu) * (cols[1] - forms.mu)
        out = np.zeros(cols[0].size)
        for size in range(0, p + 1):
            sign = 1.0 if (p - size) % 2 == 0 else -1.0
            for subset in itertools.combinations(range(p), size):
                vals = self.marginal_values(size, [cols[i] for i in subset])
                out = out + sign * (vals if size > 0 else float(vals[0]))
        return out

    def component(self, p: int, points: Sequence[float]) -> float:
        pts = [np.asarray([float(v)]) for v in points]
        return float(self.component_values(p, pts)[0])


def marginal_kernel(proj: ProjectionSet, p: int, points: Sequence[float]) -> float:
    """h_p at one point tuple."""
    return proj.marginal(p, points)


def degenerate_component(proj: ProjectionSet, p: int, points: Sequence[float]) -> float:
    """t_p at one point tuple."""
    return proj.component(p, points)


# ---------------------------------------------------------------------------
# Decomposed statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecomposedStatistic:
    """Standardized U-statistic S = L + T for one (kernel, dist, n) triple."""

    projection: ProjectionSet
    n: int
    theta: float
    sigma_g: float

    @property
    def kernel(self) -> Kernel:
        return self.projection.kernel

    @property
    def dist(self) -> Distribution:
        return self.projection.dist

    @property
    def order(self) -> int:
        return self.projection.kernel.order

    @property
    def l_scale(self) -> float:
        return 1.0 / (math.sqrt(self.n) * self.sigma_g)

    def t_scale(self, p: int) -> float:
        k = self.order
        if not 1 <= p <= k:
            raise ValidationError(f"component order must lie in [1, {k}]")
        return (
            math.sqrt(self.n)
            * math.comb(k, p)
            / (k * self.sigma_g * math.comb(self.n, p))
        )

    def _check_sample(self, data: np.ndarray) -> np.ndarray:
        x = np.asarray(data, dtype=float)
        if x.shape != (self.n,):
            raise ValidationError(f"sample must have length n = {self.n}")
        return x

    def linear_values(self, data: np.ndarray) -> np.ndarray:
        """Per-observation linear terms L_i."""
        x = self._check_sample(data)
        return self.projection.g_values(x) * self.l_scale

    def linear_part(self, data: np.ndarray) -> float:
        """L = sum of the linear terms."""
        return float(np.sum(self.linear_values(data)))

    def component_sum(self, data: np.ndarray, p: int, budget: int = DEFAULT_SUBSET_BUDGET) -> float:
        """Sum of scaled order-p components over all index subsets."""
        x = self._check_sample(data)
        if math.comb(self.n, p) > budget:
            raise BudgetError(f"C({self.n},{p}) subsets exceed budget {budget}")
        idx = np.array(list(itertools.combinations(range(self.n), p)))
        cols = [x[idx[:, c]] for c in range(p)]
        vals = self.projection.component_values(p, cols)
        return float(np.sum(vals) * self.t_scale(p))

    def remainder(self, data: np.ndarray, budget: int = DEFAULT_SUBSET_BUDGET) -> float:
        """T = sum of all degenerate component sums of order 2..k."""
        return float(
            sum(self.component_sum(data, p, budget) for p in range(2, self.order + 1))
        )

    def value(self, data: np.ndarray, budget: int = DEFAULT_SUBSET_BUDGET) -> float:
        """S via the direct path sqrt(n) (U_n - theta) / (k sigma_g)."""
        x = self._check_sample(data)
        u = model.u_statistic(self.kernel, x, budget=budget)
        return math.sqrt(self.n) * (u - self.theta) / (self.order * self.sigma_g)

    def value_via_parts(self, data: np.ndarray, budget: int = DEFAULT_SUBSET_BUDGET) -> float:
        """S via L + T; agrees with :meth:`value` up to rounding."""
        return self.linear_part(data) + self.remainder(data, budget)


def decompose(
    kernel: Kernel,
    dist: Distribution,
    n: int,
    strategy: str = "auto",
    inner_reps: int = DEFAULT_INNER_REPS,
    seed: int = 0,
) -> DecomposedStatistic:
    """Build the standardized decomposition for sample size ``n``.

    Raises :class:`DegenerateKernel` when var g is not positive relative to
    var h (threshold ``var_g <= 1e-12 * var_h``), since the standardization
    then divides by (numerical) zero.
    """
    if n < kernel.order:
        raise InsufficientSample("n must be >= kernel order")
    proj = ProjectionSet(kernel, dist, strategy=strategy, inner_reps=inner_reps, seed=seed)
    if proj.var_g <= DEGENERACY_RATIO * max(proj.var_h, 0.0):
        raise DegenerateKernel(
            f"var g = {proj.var_g:.3e} is degenerate relative to var h = {proj.var_h:.3e}"
        )
    return DecomposedStatistic(
        projection=proj,
        n=int(n),
        theta=proj.theta,
        sigma_g=math.sqrt(proj.var_g),
    )


# ---------------------------------------------------------------------------
# Moment functionals
# ---------------------------------------------------------------------------

def _tuple_expectation_exact(
    dist: FiniteDiscrete, p: int, f: Callable[[list[np.ndarray]], np.ndarray]
) -> float:
    cols = [g.ravel() for g in np.meshgrid(*([dist.atoms] * p), indexing="ij")]
    w = np.prod(np.meshgrid(*([dist.probs] * p), indexing="ij"), axis=0).ravel()
    return float(np.dot(np.asarray(f(cols), dtype=float), w))


def _tuple_expectation_mc(
    d: DecomposedStatistic,
    p: int,
    f: Callable[[list[np.ndarray]], np.ndarray],
    stream_offset: int,
) -> tuple[float, float]:
    proj = d.projection
    m = proj.inner_reps
    if isinstance(proj.dist, FiniteDiscrete):
        # The multinomial cell counts carry the same information as m raw
        # tuples, at O(atoms^p) evaluation cost instead of O(m).
        cols, w = _atom_grid(proj.dist, p)
        gen = model.stream_generator(proj.seed, STREAM_MOMENT_BASE + stream_offset)
        counts = gen.multinomial(m, w)
        mean, _, se = _count_stats(counts, np.asarray(f(cols), dtype=float))
        return mean, se
    cols = [
        model.sample(proj.dist, m, proj.seed, STREAM_MOMENT_BASE + stream_offset + j)
        for j in range(p)
    ]
    vals = np.asarray(f(cols), dtype=float)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(m))


def _abs_g_moment(d: DecomposedStatistic, q: float) -> tuple[float, Optional[float]]:
    """E|g(X)|^q under the decomposition's strategy."""
    proj = d.projection
    if proj.strategy == "exact":
        dist = proj.dist
        assert isinstance(dist, FiniteDiscrete)
        g = proj.g_values(dist.atoms)
        return float(np.dot(np.abs(g) ** q, dist.probs)), None
    if proj.strategy == "analytic":
        val = model.expectation(proj.dist, lambda x: np.abs(proj.g_values(x)) ** q)
        return val, None
    est, se = _tuple_expectation_mc(d, 1, lambda cols: np.abs(proj.g_values(cols[0])) ** q, 0)
    return est, se


def scaled_linear_moment(d: DecomposedStatistic, q: float) -> float:
    """n E|L_1|^q, the q-th absolute moment of one linear term times n."""
    if q < 0:
        raise ValidationError("q must be nonnegative")
    val, _ = _abs_g_moment(d, q)
    return d.n ** (1.0 - q / 2.0) * val / d.sigma_g**q


def beta(d: DecomposedStatistic) -> float:
    """n E|L_1|^3."""
    return scaled_linear_moment(d, 3.0)


def beta_se(d: DecomposedStatistic) -> Optional[float]:
    """MC standard error of :func:`beta`, None on deterministic strategies."""
    _, se = _abs_g_moment(d, 3.0)
    if se is None:
        return None
    return d.n ** (-0.5) * se / d.sigma_g**3


def _abs_component_moment(
    d: DecomposedStatistic, p: int, alpha: float
) -> tuple[float, Optional[float]]:
    """E|t_p|^alpha on independent argument tuples."""
    proj = d.projection

    def powered(cols: list[np.ndarray]) -> np.ndarray:
        t = proj.component_values(p, cols)
        if alpha == 2.0:
            return t * t
        return np.abs(t) ** alpha

    if proj.strategy == "exact":
        dist = proj.dist
        assert isinstance(dist, FiniteDiscrete)
        return _tuple_expectation_exact(dist, p, powered), None
    if proj.strategy == "analytic":
        forms = proj.forms
        assert forms is not None and p == 2
        abs_centered = model.expectation(
            proj.dist, lambda x: np.abs(x - forms.mu) ** alpha
        )
        return abs(forms.t2_coef) ** alpha * abs_centered**2, None
    return _tuple_expectation_mc(d, p, powered, 16 * p)


def gamma_components(d: DecomposedStatistic, alpha: float = 2.0) -> tuple[float, ...]:
    """C(n,p) E|T_(1..p)|^alpha for p = 1..k.

    The order-1 entry is identically zero: the decomposition routes the
    whole order-1 component into the linear part.
    """
    if not 1.0 <= alpha <= 2.0:
        raise ValidationError("alpha must lie in [1, 2]")
    out = [0.0]
    for p in range(2, d.order + 1):
        val, _ = _abs_component_moment(d, p, alpha)
        scale = math.comb(d.n, p) * d.t_scale(p) ** alpha
        out.append(scale * val)
    return tuple(out)


def gamma_components_se(d: DecomposedStatistic, alpha: float = 2.0) -> Optional[tuple[float, ...]]:
    if d.projection.strategy != "monte-carlo":
        return None
    out = [0.0]
    for p in range(2, d.order + 1):
        _, se = _abs_component_moment(d, p, alpha)
        scale = math.comb(d.n, p) * d.t_scale(p) ** alpha
        out.append(scale * (se or 0.0))
    return tuple(out)


def gamma_alpha(d: DecomposedStatistic, alpha: float) -> float:
    """gamma^(alpha) = sum_p C(n,p) E|T_(1..p)|^alpha."""
    return float(sum(gamma_components(d, alpha)))


def gamma_var(d: DecomposedStatistic) -> float:
    """var T; identical code path to ``gamma_alpha(d, 2.0)``."""
    return gamma_alpha(d, 2.0)


def kappa(d: DecomposedStatistic, p: int) -> float:
    """Aligned cross moment kappa_p = C(n,p) E[L_1..L_p T_(1..p)].

    kappa_1 vanishes identically for decomposed statistics (the remainder
    carries no order-1 component) and is returned as exact zero.
    """
    if not 1 <= p <= d.order:
        raise ValidationError(f"p must lie in [1, {d.order}]")
    if p == 1:
        return 0.0
    proj = d.projection

    def aligned(cols: list[np.ndarray]) -> np.ndarray:
        prod = proj.component_values(p, cols)
        for c in cols:
            prod = prod * proj.g_values(c)
        return prod

    if proj.strategy == "analytic":
        forms = proj.forms
        assert forms is not None and p == 2
        raw = forms.t2_coef * forms.e_g_centered**2
    elif proj.strategy == "exact":
        dist = proj.dist
        assert isinstance(dist, FiniteDiscrete)
        raw = _tuple_expectation_exact(dist, p, aligned)
    else:
        raw, _ = _tuple_expectation_mc(d, p, aligned, 64 * p)
    return math.comb(d.n, p) * d.l_scale**p * d.t_scale(p) * raw


def kappa_se(d: DecomposedStatistic, p: int) -> Optional[float]:
    if d.projection.strategy != "monte-carlo" or p == 1:
        return None
    proj = d.projection

    def aligned(cols: list[np.ndarray]) -> np.ndarray:
        prod = proj.component_values(p, cols)
        for c in cols:
            prod = prod * proj.g_values(c)
        return prod

    _, se = _tuple_expectation_mc(d, p, aligned, 64 * p)
    return math.comb(d.n, p) * d.l_scale**p * d.t_scale(p) * (se or 0.0)


def kappa_vector(d: DecomposedStatistic) -> tuple[float, ...]:
    """(kappa_1, ..., kappa_k)."""
    return tuple(kappa(d, p) for p in range(1, d.order + 1))


def order2_edgeworth_inputs(d: DecomposedStatistic) -> tuple[float, float, float]:
    """(E[g1 g2 t2], E[g^3], sigma_g) for order-2 Edgeworth comparators."""
    if d.order != 2:
        raise ValidationError("Edgeworth comparator inputs need an order-2 kernel")
    proj = d.projection
    if proj.strategy == "analytic":
        forms = proj.forms
        assert forms is not None
        return forms.t2_coef * forms.e_g_centered**2, forms.e_g3, d.sigma_g
    if proj.strategy == "exact":
        dist = proj.dist
        assert isinstance(dist, FiniteDiscrete)
        e_gg_eta = _tuple_expectation_exact(
            dist,
            2,
            lambda cols: proj.g_values(cols[0])
            * proj.g_values(cols[1])
            * proj.component_values(2, cols),
        )
        g = proj.g_values(dist.atoms)
        return e_gg_eta, float(np.dot(g**3, dist.probs)), d.sigma_g

    def aligned(cols: list[np.ndarray]) -> np.ndarray:
        return (
            proj.g_values(cols[0])
            * proj.g_values(cols[1])
            * proj.component_values(2, cols)
        )

    e_gg_eta, _ = _tuple_expectation_mc(d, 2, aligned, 256)
    e_g3, _ = _tuple_expectation_mc(d, 1, lambda cols: proj.g_values(cols[0]) ** 3, 256)
    return e_gg_eta, e_g3, d.sigma_g


def cross_moment_mc(
    d: DecomposedStatistic, p: int, reps: int, seed: int, stream_base: int = 0
) -> tuple[float, float]:
    """Direct Monte Carlo estimate of E[L^p T] over full-sample replicates.

    This is the O(n^k)-per-replicate cross-check path for :func:`kappa`;
    unlike the aligned formula it also picks up repeated-index terms, e.g.
    E[L^2 T] = 2 kappa_2 when the remainder is a pure order-2 sum.
    """
    if reps < 2:
        raise ValidationError("reps must be at least 2")
    vals = np.empty(reps)
    for r in range(reps):
        x = model.sample(d.dist, d.n, seed, stream_base + r)
        vals[r] = d.linear_part(x) ** p * d.remainder(x)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(reps))


# ---------------------------------------------------------------------------
# Moment summary and inequality checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSummary:
    """All moment functionals of one decomposition at one alpha."""

    n: int
    kernel_order: int
    alpha: float
    beta: float
    gamma: float
    gamma_components: tuple[float, ...]
    gamma_alpha: float
    gamma_alpha_components: tuple[float, ...]
    kappa: tuple[float, ...]
    method: str
    beta_se: Optional[float] = None
    gamma_se: Optional[float] = None
    gamma_alpha_se: Optional[float] = None
    kappa_se: Optional[tuple[Optional[float], ...]] = None

    def to_json(self) -> dict:
        out: dict = {
            "n": self.n,
            "kernel_order": self.kernel_order,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "gamma_components": list(self.gamma_components),
            "gamma_alpha": self.gamma_alpha,
            "gamma_alpha_components": list(self.gamma_alpha_components),
            "kappa": list(self.kappa),
            "method": self.method,
        }
        if self.method == "monte-carlo":
            out["beta_se"] = self.beta_se
            out["gamma_se"] = self.gamma_se
            out["gamma_alpha_se"] = self.gamma_alpha_se
            out["kappa_se"] = list(self.kappa_se or ())
        return out


def moment_summary(d: DecomposedStatistic, alpha: float = 2.0) -> MomentSummary:
    """Compute beta, gamma, gamma^(alpha), and the kappa vector."""
    comps2 = gamma_components(d, 2.0)
    comps_a = gamma_components(d, alpha) if alpha != 2.0 else comps2
    kap = kappa_vector(d)
    method = d.projection.strategy
    if method != "monte-carlo":
        return MomentSummary(
            n=d.n,
            kernel_order=d.order,
            alpha=alpha,
            beta=beta(d),
            gamma=float(sum(comps2)),
            gamma_components=comps2,
            gamma_alpha=float(sum(comps_a)),
            gamma_alpha_components=comps_a,
            kappa=kap,
            method=method,
        )
    se2 = gamma_components_se(d, 2.0) or ()
    se_a = gamma_components_se(d, alpha) or () if alpha != 2.0 else se2
    return MomentSummary(
        n=d.n,
        kernel_order=d.order,
        alpha=alpha,
        beta=beta(d),
        gamma=float(sum(comps2)),
        gamma_components=comps2,
        gamma_alpha=float(sum(comps_a)),
        gamma_alpha_components=comps_a,
        kappa=kap,
        method=method,
        beta_se=beta_se(d),
        gamma_se=float(math.sqrt(sum(s * s for s in se2))),
        gamma_alpha_se=float(math.sqrt(sum(s * s for s in se_a))),
        kappa_se=tuple(kappa_se(d, p) for p in range(1, d.order + 1)),
    )


@dataclass(frozen=True)
class InequalityItem:
    label: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class MomentInequalityReport:
    alpha: float
    items: tuple[InequalityItem, ...]

    @property
    def all_passed(self) -> bool:
        return all(item.passed for item in self.items)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "all_passed": self.all_passed,
            "items": [
                {
                    "label": it.label,
                    "lhs": it.lhs,
                    "rhs": it.rhs,
                    "passed": it.passed,
                }
                for it in self.items
            ],
        }


def moment_inequalities(
    d: DecomposedStatistic,
    alpha: float = 1.8,
    tol: float = 1e-12,
) -> MomentInequalityReport:
    """Check the structural inequalities tying beta, gamma, and kappa.

    Items, with q ranging over {2, 2.5, 3} and s over the component orders:

    * ``a``      : 1 <= sqrt(n) beta;
    * ``b:q``    : n E|L_1|^q <= beta^(q-2);
    * ``c:s``    : |kappa_s| <= sqrt(gamma_s) and gamma_s <= gamma;
    * ``d:s``    : |kappa_s| <= beta^(delta s) + gamma_s^(alpha) with
      delta = (2 - alpha)/(alpha - 1), evaluated for 3/2 < alpha < 2 and
      1 <= s < min(1/delta, k).

    ``tol`` is the additive slack accepted on each comparison.
    """
    b = beta(d)
    comps2 = gamma_components(d, 2.0)
    g_total = float(sum(comps2))
    kap = kappa_vector(d)
    items: list[InequalityItem] = []

    lhs = 1.0
    rhs = math.sqrt(d.n) * b
    items.append(InequalityItem("a", lhs, rhs, lhs <= rhs + tol))

    for q in (2.0, 2.5, 3.0):
        lhs = scaled_linear_moment(d, q)
        rhs = b ** (q - 2.0)
        items.append(InequalityItem(f"b:{q:g}", lhs, rhs, lhs <= rhs + tol))

    for s in range(1, d.order + 1):
        lhs = abs(kap[s - 1])
        rhs = math.sqrt(max(comps2[s - 1], 0.0))
        items.append(InequalityItem(f"c:{s}", lhs, rhs, lhs <= rhs + tol))
        items.append(
            InequalityItem(f"c:{s}:total", comps2[s - 1], g_total, comps2[s - 1] <= g_total + tol)
        )

    if 1.5 < alpha < 2.0:
        delta = (2.0 - alpha) / (alpha - 1.0)
        comps_a = gamma_components(d, alpha)
        s_limit = min(1.0 / delta, float(d.order))
        for s in range(1, d.order + 1):
            if not s < s_limit:
                continue
            lhs = abs(kap[s - 1])
            rhs = b ** (delta * s) + comps_a[s - 1]
            items.append(InequalityItem(f"d:{s}", lhs, rhs, lhs <= rhs + tol))

    return MomentInequalityReport(alpha=alpha, items=tuple(items))
