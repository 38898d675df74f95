"""Sampling model: distributions, symmetric kernels, and U-statistics.

Design notes
------------
* Observations are scalar floats; a sample is a 1-d float array.
* Sampling is counter-based: every call builds a fresh Philox generator
  keyed by ``(seed, stream)``, so the value of draw ``i`` in stream ``s``
  is a pure function of ``(seed, s, i)``.  Distinct streams never share
  state and regenerating any prefix of a stream reproduces it exactly.
* Built-in kernels are written so that evaluation is exactly (bit-for-bit)
  invariant under argument permutation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    ArityError,
    BudgetError,
    InsufficientSample,
    PresetError,
    ValidationError,
)

DEFAULT_SUBSET_BUDGET = 10**8

_UINT64_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Counter-based random streams
# ---------------------------------------------------------------------------

def stream_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the generator for one ``(seed, stream)`` pair.

    The 128-bit Philox key is ``seed`` in the high word and ``stream`` in
    the low word, so streams are disjoint by construction and the mapping
    is stable across runs and thread counts.
    """
    key = ((int(seed) & _UINT64_MASK) << 64) | (int(stream) & _UINT64_MASK)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteDiscrete:
    """Distribution with finite support given by ``atoms`` and ``probs``."""

    ident: str
    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if atoms.ndim != 1 or probs.shape != atoms.shape or atoms.size == 0:
            raise ValidationError("atoms and probs must be matching 1-d arrays")
        if not np.all(np.isfinite(atoms)):
            raise ValidationError("support values must be finite")
        if np.unique(atoms).size != atoms.size:
            raise ValidationError(f"duplicate support values in {self.ident!r}")
        if np.any(probs <= 0.0) or abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValidationError("probs must be positive and sum to 1")


@dataclass(frozen=True, eq=False)
class Continuous:
    """Absolutely continuous distribution with an analytic moment table.

    ``central_moments[p]`` stores the p-th central moment for p up to 6;
    ``abs_moment_fn`` is a closed form for ``E|X|^r`` when one is known.
    Anything missing falls back to adaptive quadrature of ``pdf`` over
    ``support``.
    """

    ident: str
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    pdf: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    mean: float
    var: float
    central_moments: dict[int, float] = field(default_factory=dict)
    abs_moment_fn: Optional[Callable[[float], float]] = None


Distribution = FiniteDiscrete | Continuous


def sample(dist: Distribution, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Draw ``n`` iid observations for stream ``stream`` of ``seed``."""
    if n < 0:
        raise ValidationError("sample size must be nonnegative")
    gen = stream_generator(seed, stream)
    if isinstance(dist, FiniteDiscrete):
        edges = np.cumsum(dist.probs)
        idx = np.searchsorted(edges, gen.random(n), side="right")
        return dist.atoms[np.minimum(idx, dist.atoms.size - 1)]
    return np.asarray(dist.sampler(gen, n), dtype=float)


def expectation(dist: Distribution, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact expectation for discrete support, quadrature otherwise."""
    if isinstance(dist, FiniteDiscrete):
        return float(np.dot(np.asarray(f(dist.atoms), dtype=float), dist.probs))
    lo, hi = dist.support
    val, _ = integrate.quad(lambda x: float(f(np.asarray(x))) * float(dist.pdf(np.asarray(x))),
                            lo, hi, limit=200)
    return float(val)


def mean(dist: Distribution) -> float:
    if isinstance(dist, FiniteDiscrete):
        return float(np.dot(dist.atoms, dist.probs))
    return dist.mean


def variance(dist: Distribution) -> float:
    if isinstance(dist, FiniteDiscrete):
        mu = mean(dist)
        return float(np.dot((dist.atoms - mu) ** 2, dist.probs))
    return dist.var


def central_moment(dist: Distribution, p: int) -> float:
    """p-th central moment, exact or from the analytic table."""
    if p < 0:
        raise ValidationError("moment order must be nonnegative")
    if p == 0:
        return 1.0
    if p == 1:
        return 0.0
    if isinstance(dist, FiniteDiscrete):
        mu = mean(dist)
        return float(np.dot((dist.atoms - mu) ** p, dist.probs))
    if p in dist.central_moments:
        return dist.central_moments[p]
    mu = dist.mean
    return expectation(dist, lambda x: (x - mu) ** p)


def abs_moment(dist: Distribution, r: float) -> float:
    """``E|X|^r`` for r >= 0; exact on finite support, else closed form
    or quadrature."""
    if r < 0:
        raise ValidationError("r must be nonnegative; see neg_abs_moment_std_normal")
    if isinstance(dist, FiniteDiscrete):
        return float(np.dot(np.abs(dist.atoms) ** r, dist.probs))
    if dist.abs_moment_fn is not None:
        return dist.abs_moment_fn(r)
    return expectation(dist, lambda x: np.abs(x) ** r)


def gaussian_abs_moment(r: float) -> float:
    """``E|Z|^r`` for a standard normal Z, valid for all r > -1."""
    if r <= -1:
        raise ValidationError("E|Z|^r diverges for r <= -1")
    return 2.0 ** (r / 2.0) * math.gamma((r + 1.0) / 2.0) / math.sqrt(math.pi)


def neg_abs_moment_std_normal(a: float) -> float:
    """``E|Z|^(-a)`` for standard normal Z and 0 < a < 1/2."""
    if not 0.0 < a < 0.5:
        raise ValidationError("a must lie in (0, 1/2)")
    return gaussian_abs_moment(-a)


def _normal_pdf(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def _make_normal() -> Continuous:
    return Continuous(
        ident="normal",
        sampler=lambda gen, n: gen.standard_normal(n),
        pdf=_normal_pdf,
        support=(-12.0, 12.0),
        mean=0.0,
        var=1.0,
        central_moments={2: 1.0, 3: 0.0, 4: 3.0, 5: 0.0, 6: 15.0},
        abs_moment_fn=gaussian_abs_moment,
    )


def _make_exponential() -> Continuous:
    # E|X|^r = Gamma(r + 1) for a unit-rate exponential.
    return Continuous(
        ident="exponential",
        sampler=lambda gen, n: gen.standard_exponential(n),
        pdf=lambda x: np.where(x >= 0.0, np.exp(-np.clip(x, 0.0, None)), 0.0),
        support=(0.0, 60.0),
        mean=1.0,
        var=1.0,
        central_moments={2: 1.0, 3: 2.0, 4: 9.0, 5: 44.0, 6: 265.0},
        abs_moment_fn=lambda r: math.gamma(r + 1.0),
    )


def _make_uniform01() -> Continuous:
    return Continuous(
        ident="uniform",
        sampler=lambda gen, n: gen.random(n),
        pdf=lambda x: np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0),
        support=(0.0, 1.0),
        mean=0.5,
        var=1.0 / 12.0,
        central_moments={2: 1.0 / 12.0, 3: 0.0, 4: 1.0 / 80.0, 5: 0.0, 6: 1.0 / 448.0},
        abs_moment_fn=lambda r: 1.0 / (r + 1.0),
    )


def bernoulli(p: float) -> FiniteDiscrete:
    if not 0.0 < p < 1.0:
        raise ValidationError("bernoulli parameter must lie in (0, 1)")
    return FiniteDiscrete(f"bernoulli:{p:g}", np.array([0.0, 1.0]), np.array([1.0 - p, p]))


def uniform_atoms(values: Sequence[float]) -> FiniteDiscrete:
    atoms = np.asarray(list(values), dtype=float)
    probs = np.full(atoms.size, 1.0 / atoms.size)
    ident = "uniform-atoms:" + ",".join(f"{v:g}" for v in atoms)
    return FiniteDiscrete(ident, atoms, probs)


def rademacher() -> FiniteDiscrete:
    return FiniteDiscrete("rademacher", np.array([-1.0, 1.0]), np.array([0.5, 0.5]))


def distribution_preset(ident: str) -> Distribution:
    """Resolve a distribution id such as ``bernoulli:0.3`` or ``normal``."""
    spec = ident.strip()
    if spec.startswith("dist:"):
        spec = spec[len("dist:"):]
    name, _, arg = spec.partition(":")
    try:
        if name == "bernoulli":
            return bernoulli(float(arg))
        if name == "uniform-atoms":
            return uniform_atoms([float(v) for v in arg.split(",") if v != ""])
        if name == "rademacher" and not arg:
            return rademacher()
        if name == "normal" and not arg:
            return _make_normal()
        if name == "exponential" and not arg:
            return _make_exponential()
        if name == "uniform" and not arg:
            return _make_uniform01()
    except (ValueError, ValidationError) as exc:
        raise PresetError(f"bad distribution preset {ident!r}: {exc}") from exc
    raise PresetError(f"unknown distribution preset {ident!r}")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Kernel:
    """Symmetric kernel of ``order`` scalar arguments.

    ``fn`` must accept ``order`` numpy-broadcastable arguments.  ``params``
    carries named kernel parameters (used by analytic projections).
    """

    ident: str
    order: int
    fn: Callable[..., np.ndarray]
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValidationError("kernel order must be at least 1")


def eval_kernel(kernel: Kernel, points: Sequence[float]) -> float:
    """Evaluate the kernel at one tuple of scalar observations."""
    pts = np.asarray(points, dtype=float)
    if pts.shape != (kernel.order,):
        raise ArityError(
            f"kernel {kernel.ident!r} takes {kernel.order} points, got shape {pts.shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValidationError("kernel arguments must be finite")
    return float(kernel.fn(*pts))


def kernel_values(kernel: Kernel, columns: Sequence[np.ndarray]) -> np.ndarray:
    """Vectorized kernel evaluation over parallel argument columns."""
    if len(columns) != kernel.order:
        raise ArityError(
            f"kernel {kernel.ident!r} takes {kernel.order} columns, got {len(columns)}"
        )
    return np.asarray(kernel.fn(*columns), dtype=float)


def _variance_fn(x, y):
    return 0.5 * np.square(x - y)


def _gini_fn(x, y):
    return np.abs(x - y)


def _product_fn(x, y):
    return x * y


def variance_kernel() -> Kernel:
    """h(x, y) = (x - y)^2 / 2; its U-statistic is the sample variance."""
    return Kernel("variance", 2, _variance_fn)


def gini_kernel() -> Kernel:
    """h(x, y) = |x - y|, the mean absolute difference kernel."""
    return Kernel("gini", 2, _gini_fn)


def product_kernel() -> Kernel:
    """h(x, y) = x * y; fully degenerate under centered distributions."""
    return Kernel("product", 2, _product_fn)


def quadratic_kernel(eps: float) -> Kernel:
    """h(x, y) = (x + y)/2 + eps * x * y.

    Under a centered distribution the linear projection is x/2 and the
    degenerate part is exactly ``eps * x * y``, which makes the size of
    the remainder directly tunable through ``eps``.
    """
    if not math.isfinite(eps):
        raise ValidationError("eps must be finite")

    def fn(x, y):
        return 0.5 * (x + y) + eps * (x * y)

    return Kernel(f"quadratic:{eps:g}", 2, fn, params={"eps": float(eps)})


def kernel_preset(ident: str) -> Kernel:
    """Resolve a kernel id such as ``variance`` or ``quadratic:0.5``."""
    spec = ident.strip()
    if spec.startswith("kernel:"):
        spec = spec[len("kernel:"):]
    name, _, arg = spec.partition(":")
    try:
        if name == "variance" and not arg:
            return variance_kernel()
        if name == "gini" and not arg:
            return gini_kernel()
        if name == "product" and not arg:
            return product_kernel()
        if name == "quadratic":
            return quadratic_kernel(float(arg) if arg else 0.0)
    except (ValueError, ValidationError) as exc:
        raise PresetError(f"bad kernel preset {ident!r}: {exc}") from exc
    raise PresetError(f"unknown kernel preset {ident!r}")


def symmetrize(fn: Callable[..., np.ndarray], order: int, ident: str = "symmetrized") -> Kernel:
    """Average an arbitrary kernel over all argument permutations.

    Supported up to order 6 (6! = 720 evaluations per call).
    """
    if not 1 <= order <= 6:
        raise ValidationError("symmetrize supports orders 1 through 6")
    perms = list(itertools.permutations(range(order)))
    weight = 1.0 / len(perms)

    def sym_fn(*args):
        if len(args) != order:
            raise ArityError(f"expected {order} arguments, got {len(args)}")
        total = fn(*args)
        for perm in perms[1:]:
            total = total + fn(*(args[i] for i in perm))
        return weight * total

    return Kernel(ident, order, sym_fn)


# ---------------------------------------------------------------------------
# U-statistic evaluation
# ---------------------------------------------------------------------------

def u_statistic(
    kernel: Kernel,
    data: np.ndarray,
    budget: int = DEFAULT_SUBSET_BUDGET,
) -> float:
    """Average of the kernel over all increasing index subsets.

    Index subsets are enumerated in lexicographic order; orders up to 3 use
    vectorized index arrays, higher orders iterate subsets directly.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 1:
        raise ValidationError("sample must be a 1-d array")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sample values must be finite")
    n = x.size
    k = kernel.order
    if n < k:
        raise InsufficientSample("n must be >= kernel order")
    n_subsets = math.comb(n, k)
    if n_subsets > budget:
        raise BudgetError(
            f"C({n},{k}) = {n_subsets} subsets exceeds budget {budget}"
        )
    if k == 1:
        return float(np.mean(kernel_values(kernel, [x])))
    if k == 2:
        i, j = np.triu_indices(n, 1)
        return float(np.mean(kernel_values(kernel, [x[i], x[j]])))
    if k == 3:
        idx = np.array(list(itertools.combinations(range(n), 3)))
        cols = [x[idx[:, c]] for c in range(3)]
        return float(np.mean(kernel_values(kernel, cols)))
    total = math.fsum(
        float(kernel.fn(*(x[i] for i in combo)))
        for combo in itertools.combinations(range(n), k)
    )
    return total / n_subsets
