"""Seeded random matrix families and their predicate suites.

Four families, each built from a per-member PCG64 stream so that member
``i`` of a run with seed ``s`` depends only on ``s ^ i``:

* ``positive``        nonnegative power-bounded matrices mixing primitive
                      blocks (Perron root scaled to 1) with cyclic blocks
                      (positive weights, cycle product 1), permuted;
* ``monomial_unimodular``  one positive entry per row and column with all
                      cycle products 1, so the spectrum is unimodular and
                      semisimple and the member differs from the identity;
* ``p_contractive``   signed permutations, contractive in every p-norm;
* ``primitive``       strictly positive with Perron root scaled to 1.

``run_ensemble`` runs the family's predicate suite (distance gap, cyclic
closure of the peripheral set, root-of-unity spectrum, rank-1 limits)
and aggregates pass counts and worst margins.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .infinity import converges, infinity_decomposition, sqrt2_gap_check
from .semigroups import discrete_semigroup
from .spectral import induced_norm

__all__ = [
    "DEFAULT_SEED",
    "GENERATOR_NAME",
    "EnsembleMember",
    "EnsembleStats",
    "MemberOutcome",
    "draw",
    "member",
    "run_ensemble",
]

DEFAULT_SEED = 1729
GENERATOR_NAME = "pcg64"

KINDS = ("positive", "monomial_unimodular", "p_contractive", "primitive")

_DIM_RANGE = (2, 8)


class EnsembleMember(NamedTuple):
    index: int
    seed: int
    dim: int
    matrix: np.ndarray


class MemberOutcome(NamedTuple):
    index: int
    seed: int
    dim: int
    margin: float
    passed: bool


@dataclass
class EnsembleStats:
    """Aggregated predicate-suite results for one seeded family run."""

    kind: str
    count: int
    seed: int
    rng: str
    passes: int
    failures: int
    worst: float
    margin_label: str
    members: list


def _rng_for(seed, index):
    return np.random.Generator(np.random.PCG64(seed ^ index))


def _cycles(perm):
    seen = np.zeros(len(perm), dtype=bool)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        j = perm[start]
        while j != start:
            cyc.append(j)
            seen[j] = True
            j = perm[j]
        out.append(cyc)
    return out


def _monomial_matrix(rng, dim):
    while True:
        perm = rng.permutation(dim)
        if np.any(perm != np.arange(dim)):
            break
    weights = rng.uniform(0.5, 2.0, dim)
    for cyc in _cycles(perm):
        prod = float(np.prod(weights[cyc]))
        weights[cyc] /= prod ** (1.0 / len(cyc))
    T = np.zeros((dim, dim))
    T[np.arange(dim), perm] = weights
    return T


def _signed_permutation_matrix(rng, dim):
    perm = rng.permutation(dim)
    signs = rng.choice([-1.0, 1.0], dim)
    T = np.zeros((dim, dim))
    T[np.arange(dim), perm] = signs
    return T


def _primitive_matrix(rng, dim):
    M = rng.uniform(0.1, 1.0, (dim, dim))
    rho = float(np.max(np.abs(np.linalg.eigvals(M))))
    return M / rho


def _cyclic_block(rng, size):
    if size == 1:
        return np.array([[1.0]])
    weights = rng.uniform(0.5, 2.0, size)
    weights /= float(np.prod(weights)) ** (1.0 / size)
    C = np.zeros((size, size))
    for i in range(size):
        C[i, (i + 1) % size] = weights[i]
    return C


def _positive_matrix(rng, dim):
    sizes = []
    left = dim
    while left:
        k = int(rng.integers(1, left + 1))
        sizes.append(k)
        left -= k
    blocks = []
    for k in sizes:
        if k > 1 and rng.random() < 0.5:
            blocks.append(_primitive_matrix(rng, k))
        else:
            blocks.append(_cyclic_block(rng, k))
    B = scipy.linalg.block_diag(*blocks)
    p = rng.permutation(dim)
    return B[np.ix_(p, p)]


_BUILDERS = {
    "positive": _positive_matrix,
    "monomial_unimodular": _monomial_matrix,
    "p_contractive": _signed_permutation_matrix,
    "primitive": _primitive_matrix,
}


def member(kind, seed, index):
    """Member ``index`` of the ``kind`` family run with ``seed``."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown ensemble kind {kind!r}, expected one of {KINDS}")
    member_seed = seed ^ index
    rng = _rng_for(seed, index)
    dim = int(rng.integers(_DIM_RANGE[0], _DIM_RANGE[1] + 1))
    return EnsembleMember(index, member_seed, dim, _BUILDERS[kind](rng, dim))


def draw(kind, count, seed=DEFAULT_SEED):
    """The first ``count`` members of the family."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return [member(kind, seed, i) for i in range(count)]


def _closure_defect(lams, order):
    """Largest distance from any power of a peripheral value back to the set."""
    worst = 0.0
    for lam in lams:
        power = lam
        for _ in range(max(1, order)):
            power_next = power * lam
            worst = max(worst, float(np.min(np.abs(lams - power))))
            power = power_next
    return worst


def _positive_outcome(T):
    dec = infinity_decomposition(discrete_semigroup(T))
    if not dec.exists_compact:
        return False, math.inf
    lams = np.asarray(dec.peripheral.eigenvalues, dtype=complex)
    order = dec.group.order if dec.group.order else 1
    defect = _closure_defect(lams, order)
    return defect <= 1e-7, defect


def _monomial_outcome(T):
    ok, dist = sqrt2_gap_check(T)
    return bool(ok) and dist >= math.sqrt(2) - 1e-9, float(dist)


def _contractive_outcome(T):
    dec = infinity_decomposition(discrete_semigroup(T))
    if not dec.exists_compact or dec.group.kind not in ("trivial", "finite_cyclic"):
        return False, math.inf
    lams = np.asarray(dec.peripheral.eigenvalues, dtype=complex)
    order = dec.group.order if dec.group.order else 1
    margin = float(np.max(np.abs(lams**order - 1.0))) if lams.size else 0.0
    return margin <= 1e-7, margin


def _perron_projection(T):
    vals, vecs = np.linalg.eig(T)
    right = vecs[:, int(np.argmin(np.abs(vals - 1.0)))]
    vals_l, vecs_l = np.linalg.eig(T.T)
    left = vecs_l[:, int(np.argmin(np.abs(vals_l - 1.0)))]
    return np.real(np.outer(right, left) / (left @ right))


def _primitive_outcome(T):
    report = converges(discrete_semigroup(T))
    if not report.converges or report.limit is None:
        return False, math.inf
    deviation = float(induced_norm(report.limit - _perron_projection(T), np.inf))
    return deviation <= 1e-8, deviation


_OUTCOMES = {
    "positive": _positive_outcome,
    "monomial_unimodular": _monomial_outcome,
    "p_contractive": _contractive_outcome,
    "primitive": _primitive_outcome,
}

_MARGIN_LABELS = {
    "positive": "max distance from peripheral powers back to the set",
    "monomial_unimodular": "min 2-norm distance from the identity",
    "p_contractive": "max deviation of peripheral values from detected roots of unity",
    "primitive": "max sup-norm deviation of the limit from the rank-1 oracle",
}


def _evaluate(kind, seed, index):
    m = member(kind, seed, index)
    passed, margin = _OUTCOMES[kind](m.matrix)
    return MemberOutcome(m.index, m.seed, m.dim, margin, passed)


def run_ensemble(kind, count, seed=DEFAULT_SEED, jobs=1):
    """Draw ``count`` members and run the family's predicate suite."""
    if kind not in _OUTCOMES:
        raise ValueError(f"unknown ensemble kind {kind!r}, expected one of {KINDS}")
    if count < 1:
        raise ValueError("count must be at least 1")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda i: _evaluate(kind, seed, i), range(count)))
    else:
        outcomes = [_evaluate(kind, seed, i) for i in range(count)]
    passes = sum(1 for o in outcomes if o.passed)
    margins = [o.margin for o in outcomes]
    worst = min(margins) if kind == "monomial_unimodular" else max(margins)
    return EnsembleStats(
        kind=kind,
        count=count,
        seed=seed,
        rng=GENERATOR_NAME,
        passes=passes,
        failures=count - passes,
        worst=float(worst),
        margin_label=_MARGIN_LABELS[kind],
        members=outcomes,
    )
