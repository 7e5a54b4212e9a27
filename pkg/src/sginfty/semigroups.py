"""One-parameter matrix semigroups and their index monoids.

A SemigroupSpec is either a discrete power family (T^n) indexed by the
naturals or a continuous exponential family (e^{tA}). The index monoid is
carried along because the algebra of the index set, in particular essential
divisibility, gates which convergence theorems apply downstream.
"""

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    _log_norm,
    as_operator,
    eig_decompose,
    induced_norm,
    log_norm_inf,
    matrix_exponential,
)

__all__ = [
    "IndexMonoid",
    "SemigroupSpec",
    "NATURALS",
    "NONNEG_REALS",
    "DYADICS",
    "NONNEG_RATIONALS",
    "MAX_LATTICE",
    "parse_monoid",
    "discrete_semigroup",
    "continuous_semigroup",
    "sample",
    "is_essentially_divisible",
    "is_bounded",
    "is_contractive",
    "BoundResult",
]

#: |lambda| within this band of 1 counts as unimodular
UNIT_CIRCLE_TOL = 1e-8

_MONOID_KINDS = (
    "naturals",
    "nonneg_reals",
    "nonneg_reals_power",
    "dyadics",
    "nonneg_rationals",
    "max_lattice",
)

# kinds for which n*t1 = s + n*t2 is always solvable: divide s by n (reals,
# rationals, coordinatewise powers) or take t1 = t2 = s (max semilattice);
# the naturals fail at s = 1, n = 2 and the dyadics at n = 3
_DIVISIBLE_KINDS = frozenset(
    {"nonneg_reals", "nonneg_reals_power", "nonneg_rationals", "max_lattice"}
)


@dataclass(frozen=True)
class IndexMonoid:
    """Descriptor of the commutative index monoid of a semigroup."""

    kind: str
    power: int = 1

    def __post_init__(self):
        if self.kind not in _MONOID_KINDS:
            raise ValueError(f"unknown monoid kind {self.kind!r}")
        if self.power < 1:
            raise ValueError("power must be a positive integer")
        if self.kind != "nonneg_reals_power" and self.power != 1:
            raise ValueError(f"monoid {self.kind!r} takes no power parameter")

    @property
    def essentially_divisible(self):
        return self.kind in _DIVISIBLE_KINDS

    @property
    def samplable(self):
        # the max semilattice has no additive sampling semantics
        return self.kind != "max_lattice"

    def __str__(self):
        if self.kind == "nonneg_reals_power" and self.power != 1:
            return f"{self.kind}:{self.power}"
        return self.kind


NATURALS = IndexMonoid("naturals")
NONNEG_REALS = IndexMonoid("nonneg_reals")
DYADICS = IndexMonoid("dyadics")
NONNEG_RATIONALS = IndexMonoid("nonneg_rationals")
MAX_LATTICE = IndexMonoid("max_lattice")

_CONTINUOUS_MONOIDS = frozenset({"nonneg_reals", "dyadics", "nonneg_rationals"})


def parse_monoid(name):
    """Parse a monoid name, optionally 'nonneg_reals_power:<n>'."""
    text = str(name).strip()
    if ":" in text:
        kind, _, arg = text.partition(":")
        try:
            return IndexMonoid(kind, int(arg))
        except ValueError as exc:
            raise ValueError(f"bad monoid descriptor {name!r}: {exc}") from exc
    return IndexMonoid(text)


@dataclass(frozen=True, eq=False)
class SemigroupSpec:
    """A discrete (matrix power) or continuous (matrix exponential) semigroup.

    mode 'discrete' stores T and pairs only with the naturals; mode
    'continuous' stores the generator A and pairs with the nonnegative reals
    (default), dyadics or nonnegative rationals. norm_p in {1, 2, inf} fixes
    the operator norm used by all predicates.
    """

    mode: str
    matrix: np.ndarray
    monoid: IndexMonoid = NONNEG_REALS
    norm_p: object = 2

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"mode must be discrete or continuous, not {self.mode!r}")
        object.__setattr__(self, "matrix", as_operator(self.matrix))
        if self.norm_p not in (1, 2) and self.norm_p != np.inf:
            raise ValueError(f"norm_p must be 1, 2 or inf, got {self.norm_p!r}")
        if self.mode == "discrete" and self.monoid != NATURALS:
            raise ValueError("discrete semigroups are indexed by the naturals")
        if self.mode == "continuous" and self.monoid.kind not in _CONTINUOUS_MONOIDS:
            raise ValueError(
                f"continuous semigroups cannot be indexed by {self.monoid}"
            )

    @property
    def dim(self):
        return self.matrix.shape[0]


def discrete_semigroup(T, norm_p=2):
    return SemigroupSpec("discrete", T, NATURALS, norm_p)


def continuous_semigroup(A, monoid=NONNEG_REALS, norm_p=2):
    return SemigroupSpec("continuous", A, monoid, norm_p)


def sample(sg, s):
    """T_s: the matrix power T^s (discrete) or exponential e^{sA}."""
    s = float(s)
    if s < 0:
        raise ValueError(f"index must be nonnegative, got {s}")
    if sg.mode == "discrete":
        if s != int(s):
            raise ValueError(f"discrete semigroup sampled at non-integer {s}")
        return np.linalg.matrix_power(sg.matrix, int(s))
    return matrix_exponential(sg.matrix, s)


def is_essentially_divisible(monoid):
    """Whether for all s, n there are t1, t2 with n*t1 = s + n*t2."""
    return monoid.essentially_divisible


class BoundResult(tuple):
    """(bounded, bound) with bound = sup_s ||T_s|| when bounded."""

    __slots__ = ()

    def __new__(cls, bounded, bound):
        return super().__new__(cls, (bool(bounded), float(bound)))

    @property
    def bounded(self):
        return self[0]

    @property
    def bound(self):
        return self[1]


def _peripheral_split(dec, mode):
    """Split items into (peripheral, stable) per mode's boundary rule."""
    per, stab = [], []
    for it in dec.items:
        if mode == "discrete":
            boundary = abs(abs(it.eigenvalue) - 1.0) <= UNIT_CIRCLE_TOL
        else:
            boundary = abs(it.eigenvalue.real) <= UNIT_CIRCLE_TOL
        (per if boundary else stab).append(it)
    return per, stab


def _spectrally_bounded(dec, mode):
    """Spectral test: inside the disc/half-plane, boundary semisimple."""
    for it in dec.items:
        if mode == "discrete":
            above = abs(it.eigenvalue) > 1.0 + UNIT_CIRCLE_TOL
        else:
            above = it.eigenvalue.real > UNIT_CIRCLE_TOL
        if above:
            return False
    per, _ = _peripheral_split(dec, mode)
    return all(it.pole_order == 1 for it in per)


def _hermitian_projections(items, scale):
    tol = 1e-10 * max(1.0, scale)
    return all(
        np.linalg.norm(it.projection - it.projection.conj().T, 2) <= tol
        for it in items
    )


def _peripheral_cap(per_items, p, scale, enumerate_powers=None):
    """Upper bound for sup over the peripheral flow of ||sum e^{i th} P||_p.

    Exact when the projections are Hermitian and p = 2 (the flow is then a
    family of partial isometries), or when the peripheral arguments generate
    a small finite cyclic group that enumerate_powers visits; otherwise the
    triangle-inequality sum of projection norms.
    """
    if not per_items:
        return 0.0
    if p == 2 and _hermitian_projections(per_items, scale):
        return 1.0
    if enumerate_powers is not None:
        return enumerate_powers()
    return float(sum(induced_norm(it.projection, p) for it in per_items))


def _finite_cyclic_order(per_items, k_max=4096, tol=1e-9):
    """lcm of root-of-unity orders of the peripheral eigenvalues, or None."""
    order = 1
    for it in per_items:
        theta = np.angle(it.eigenvalue)
        k = np.arange(1, k_max + 1)
        hits = np.abs(np.exp(1j * k * theta) - 1.0) < tol
        if not hits.any():
            return None
        order = math.lcm(order, int(k[hits.argmax()]))
        if order > k_max:
            return None
    return order


def _bound_discrete(T, dec, p):
    n = T.shape[0]
    scale = np.linalg.norm(T, 2)
    per, _ = _peripheral_split(dec, "discrete")
    P = sum((it.projection for it in per), np.zeros((n, n), dtype=complex))
    Q = np.eye(n) - P

    def cyclic_enumeration():
        order = _finite_cyclic_order(per)
        if order is None:
            return float(sum(induced_norm(it.projection, p) for it in per))
        worst = 0.0
        for j in range(order):
            Mj = sum(
                it.eigenvalue**j * it.projection / abs(it.eigenvalue) ** j
                for it in per
            )
            worst = max(worst, induced_norm(Mj, p))
        return worst

    cap = _peripheral_cap(per, p, scale, cyclic_enumeration)

    # walk the powers: the full transient plus the stable tail T^n Q -> 0;
    # sup_{m>n} ||T^m Q|| <= max_{k<=n} ||T^k Q|| * ||T^n Q||
    transient = 1.0
    tail_max = induced_norm(Q, p)
    tail_now = tail_max
    W = np.eye(n, dtype=complex)
    target = 1e-9 * max(1.0, cap)
    for _ in range(20000):
        if tail_now <= target:
            break
        W = T @ W
        transient = max(transient, induced_norm(W, p))
        tail_now = induced_norm(W @ Q, p)
        tail_max = max(tail_max, tail_now)
    return max(transient, cap + tail_max * tail_now)


def _bound_continuous(A, dec, p):
    n = A.shape[0]
    scale = np.linalg.norm(A, 2)
    per, _ = _peripheral_split(dec, "continuous")
    P = sum((it.projection for it in per), np.zeros((n, n), dtype=complex))
    Q = np.eye(n) - P

    cap = _peripheral_cap(per, p, scale)
    # grid step chosen so the between-sample growth factor stays tight
    mu = max(0.0, _log_norm(A, p))
    delta = min(1.0, 0.25 / max(mu, 0.25))
    growth = math.exp(delta * mu)
    E = matrix_exponential(A, delta)

    transient = 1.0
    tail_max = induced_norm(Q, p)
    tail_now = tail_max
    W = np.eye(n, dtype=complex)
    target = 1e-9 * max(1.0, cap)
    for _ in range(20000):
        if tail_now <= target:
            break
        W = E @ W
        transient = max(transient, induced_norm(W, p))
        tail_now = induced_norm(W @ Q, p)
        tail_max = max(tail_max, tail_now)
    tail_sup = tail_max * growth
    return max(transient * growth, cap + tail_sup * tail_now)


def is_bounded(sg):
    """Decide sup_s ||T_s|| < inf spectrally; estimate the bound when finite.

    Discrete: bounded iff r(T) < 1 or r(T) = 1 with semisimple unimodular
    eigenvalues. Continuous: bounded iff the spectral bound of A is < 0 or
    = 0 with semisimple imaginary-axis eigenvalues. The returned bound
    dominates every sampled norm: transient maximum plus a certified
    peripheral cap and a submultiplicative tail estimate.
    """
    dec = eig_decompose(sg.matrix)
    if not _spectrally_bounded(dec, sg.mode):
        return BoundResult(False, math.inf)
    if sg.mode == "discrete":
        bound = _bound_discrete(sg.matrix, dec, sg.norm_p)
    else:
        bound = _bound_continuous(sg.matrix, dec, sg.norm_p)
    return BoundResult(True, bound)


def is_contractive(sg, times=None, tol=1e-9):
    """Whether ||T_s||_p <= 1 + tol.

    Discrete families reduce to the single check ||T||_p <= 1 + tol by
    submultiplicativity. Continuous families use the logarithmic sup-norm
    certificate when p = inf and a real generator; otherwise the norm is
    sampled at the given times (which must then be provided).
    """
    p = sg.norm_p
    if sg.mode == "discrete":
        return bool(induced_norm(sg.matrix, p) <= 1.0 + tol)
    A = sg.matrix
    if p == np.inf and np.all(A.imag == 0):
        return bool(log_norm_inf(A.real) <= tol)
    if not times:
        raise ValueError("continuous p-norm check needs a nonempty times list")
    return all(
        induced_norm(matrix_exponential(A, float(t)), p) <= 1.0 + tol
        for t in times
    )
