"""Limit structure of bounded matrix semigroups.

Splits the state space into a reversible part, on which the sampled
operators act as a compact abelian group (trivial, finite cyclic, or the
closure of a line in a torus), and a stable part on which they decay. The
projection onto the reversible part is the norm limit of suitable operator
subsequences, which makes norm convergence of the whole family a statement
about the peripheral spectrum; `converges` and its positive-matrix variants
report exactly that, with machine-checkable reasons.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import PositivityError
from .semigroups import (
    UNIT_CIRCLE_TOL,
    _peripheral_split,
    _spectrally_bounded,
    discrete_semigroup,
    is_essentially_divisible,
    sample,
)
from .spectral import (
    PeripheralSet,
    _log_norm,
    as_operator,
    eig_decompose,
    resolvent,
)

__all__ = [
    "Reason",
    "GroupDescriptor",
    "InfinityDecomposition",
    "ConvergenceReport",
    "PoleProbeResult",
    "QuasiCompactWitness",
    "SubsemigroupCheck",
    "infinity_decomposition",
    "converges",
    "abel_pole_probe",
    "quasi_compactness_witness",
    "group_structure",
    "find_return_times",
    "positive_convergence_check",
    "strong_positivity_convergence",
    "subsemigroup_consistency",
    "sqrt2_gap_check",
]

#: Abel probe classification threshold; its reciprocal is the blow-up bound
PROBE_EPS = 1e-6


class Reason(NamedTuple):
    """One criterion line in a convergence report."""

    tag: str
    verdict: str  # "pass" | "fail" | "indeterminate"
    anchor: str


class QuasiCompactWitness(NamedTuple):
    """Power n, rank r and gap 1 - ||T^n - K_r|| certifying quasi-compactness."""

    power: int
    rank: int
    gap: float


class SubsemigroupCheck(NamedTuple):
    """Agreement of the flow projection with the one of a sampled power family."""

    coincide: bool
    deviation: float
    aliasing: bool


@dataclass
class GroupDescriptor:
    """Closure of the operator family restricted to the reversible subspace.

    kind "trivial" means the only peripheral eigenvalue is 1; "finite_cyclic"
    carries the minimal common order of the peripheral roots of unity;
    "torus_closure" carries a heuristic lower bound for the closure rank.
    """

    kind: str
    order: Optional[int] = None
    rank: Optional[int] = None
    peripheral_arguments: list = field(default_factory=list)


@dataclass
class InfinityDecomposition:
    """Reversible/stable splitting of a bounded semigroup."""

    exists_compact: bool
    P_inf: Optional[np.ndarray]
    E_inf_basis: Optional[np.ndarray]
    peripheral: PeripheralSet
    stable_spectral_radius: Optional[float]
    group: Optional[GroupDescriptor]
    reason: str


@dataclass
class ConvergenceReport:
    """Norm-convergence verdict with criterion-by-criterion reasons."""

    converges: bool
    limit: Optional[np.ndarray]
    limit_rank: Optional[int]
    divisibility_gate: bool
    reasons: list


@dataclass
class PoleProbeResult:
    """Outcome of a resolvent probe along a geometric approach schedule."""

    classification: str  # "resolvent_point" | "first_order_pole" | "higher_order_pole"
    projection: Optional[np.ndarray]
    schedule: list
    final_norm: float
    norms: list = field(default_factory=list)


def _root_of_unity_order(lam, k_max, tol):
    """Smallest k <= k_max with lam^k = 1 within tol, or None."""
    lam = complex(lam) / abs(lam)
    if abs(lam - 1.0) <= tol:
        return 1
    theta = float(np.angle(lam))
    ks = np.arange(1, int(k_max) + 1)
    # |e^{ik theta} - 1| = 2 |sin(k theta / 2)|
    hits = 2.0 * np.abs(np.sin(ks * (theta / 2.0))) < tol
    if not hits.any():
        return None
    return int(ks[np.argmax(hits)])


def _rational_rank_lower_bound(values, mod_one, tol=1e-6, coeff_max=24):
    """Heuristic count of rationally independent reals among `values`.

    Groups values linked by a small integer relation p*u + q*v (+ r) = 0 and
    counts the classes. Relations with coefficients beyond coeff_max go
    undetected, so treat the result as an estimate, not a certificate.
    """
    vals = [float(v) for v in values]
    reps = []
    for v in vals:
        linked = False
        for u in reps:
            scale = abs(u) + abs(v) + 1.0
            for p in range(1, coeff_max + 1):
                for q in range(-coeff_max, coeff_max + 1):
                    if q == 0 and not mod_one:
                        continue
                    x = p * u + q * v
                    if mod_one:
                        x = x - round(x)
                    if abs(x) <= tol * scale:
                        linked = True
                        break
                if linked:
                    break
            if linked:
                break
        if not linked:
            reps.append(v)
    return max(1, len(reps)) if vals else 0


def group_structure(peripheral, k_max=10_000, tol=1e-9):
    """Identify the closure generated by a set of unit-circle eigenvalues.

    Every eigenvalue is scanned for a root-of-unity order k <= k_max; if all
    orders are found the result is trivial (all 1) or finite cyclic of their
    lcm, otherwise the closure is a torus and the rank field is a heuristic
    lower bound from pairwise rational-dependence tests.
    """
    band = max(float(tol), float(peripheral.tol))
    for lam in peripheral.eigenvalues:
        if abs(abs(complex(lam)) - peripheral.circle_radius) > band:
            raise ValueError(
                f"eigenvalue {complex(lam):.6g} is not on the circle of radius "
                f"{peripheral.circle_radius} (tolerance {band:.1e})"
            )
    args = peripheral.arguments
    if len(peripheral) == 0:
        return GroupDescriptor("trivial", peripheral_arguments=[])
    orders = [
        _root_of_unity_order(lam, k_max, tol) for lam in peripheral.eigenvalues
    ]
    if all(o is not None for o in orders):
        order = math.lcm(*orders)
        if order == 1:
            return GroupDescriptor("trivial", peripheral_arguments=args)
        return GroupDescriptor(
            "finite_cyclic", order=order, peripheral_arguments=args
        )
    irrational = [
        th / (2.0 * np.pi) for th, o in zip(args, orders) if o is None
    ]
    rank = _rational_rank_lower_bound(irrational, mod_one=True)
    return GroupDescriptor("torus_closure", rank=rank, peripheral_arguments=args)


def _continuous_group(betas, tol=1e-8):
    """Closure of the frequency flow t -> (e^{i beta t})_j."""
    nonzero = [b for b in betas if abs(b) > tol]
    if not nonzero:
        return GroupDescriptor("trivial", peripheral_arguments=list(betas))
    rank = _rational_rank_lower_bound(nonzero, mod_one=False)
    return GroupDescriptor(
        "torus_closure", rank=rank, peripheral_arguments=list(betas)
    )


def _unboundedness_detail(dec, mode):
    for it in dec.items:
        lam = it.eigenvalue
        if mode == "discrete" and abs(lam) > 1.0 + UNIT_CIRCLE_TOL:
            return f"eigenvalue {lam:.6g} has modulus {abs(lam):.6g} > 1"
        if mode == "continuous" and lam.real > UNIT_CIRCLE_TOL:
            return f"eigenvalue {lam:.6g} has positive real part"
    per, _ = _peripheral_split(dec, mode)
    for it in per:
        if it.pole_order != 1:
            where = "the unit circle" if mode == "discrete" else "the imaginary axis"
            return (
                f"eigenvalue {it.eigenvalue:.6g} on {where} has resolvent "
                f"pole order {it.pole_order}"
            )
    return "norm growth detected"


def infinity_decomposition(sg, k_max=10_000, tol=1e-9):
    """Reversible/stable splitting of the semigroup.

    For a bounded family the projection P_inf sums the spectral projections
    of the peripheral eigenvalues (unit circle for power families, imaginary
    axis for exponential families); exists_compact then holds and the group
    descriptor identifies the closure of the restricted family. Unbounded
    input yields exists_compact = False with a diagnostic reason.
    """
    dec = eig_decompose(sg.matrix)
    per_items, stable_items = _peripheral_split(dec, sg.mode)
    if sg.mode == "discrete":
        per_eigs = [complex(it.eigenvalue) for it in per_items]
    else:
        per_eigs = [complex(np.exp(1j * it.eigenvalue.imag)) for it in per_items]
    peripheral = PeripheralSet(circle_radius=1.0, eigenvalues=per_eigs)

    if not _spectrally_bounded(dec, sg.mode):
        return InfinityDecomposition(
            exists_compact=False,
            P_inf=None,
            E_inf_basis=None,
            peripheral=peripheral,
            stable_spectral_radius=None,
            group=None,
            reason="not power-bounded: " + _unboundedness_detail(dec, sg.mode),
        )

    n = sg.dim
    P = np.zeros((n, n), dtype=complex)
    for it in per_items:
        P = P + it.projection
    if stable_items:
        if sg.mode == "discrete":
            ssr = max(abs(it.eigenvalue) for it in stable_items)
        else:
            ssr = max(math.exp(it.eigenvalue.real) for it in stable_items)
    else:
        ssr = 0.0

    if sg.mode == "discrete":
        group = group_structure(peripheral, k_max=k_max, tol=tol)
    else:
        group = _continuous_group([it.eigenvalue.imag for it in per_items])

    U, sigma, _ = np.linalg.svd(P)
    rank = int(np.count_nonzero(sigma > 0.5))
    basis = U[:, :rank]
    reason = (
        f"bounded family: {len(per_items)} peripheral eigenvalue cluster(s), "
        f"stable spectral radius {ssr:.6g}"
    )
    return InfinityDecomposition(
        exists_compact=True,
        P_inf=P,
        E_inf_basis=basis,
        peripheral=peripheral,
        stable_spectral_radius=float(ssr),
        group=group,
        reason=reason,
    )


def _gate_reason(sg, gate):
    state = "is" if gate else "is not"
    verdict = "pass" if gate else "indeterminate"
    return Reason(
        "divisibility-gate",
        verdict,
        f"index monoid {sg.monoid} {state} essentially divisible",
    )


def _is_metzler(A, tol=1e-12):
    if np.any(np.abs(A.imag) > tol):
        return False
    off = A.real.copy()
    np.fill_diagonal(off, 0.0)
    return bool(np.min(off) >= -tol)


def _base_report(sg):
    """Shared analysis behind the convergence verdicts. Returns (dec, report)."""
    dec = infinity_decomposition(sg)
    gate = is_essentially_divisible(sg.monoid)
    reasons = []
    if not dec.exists_compact:
        reasons.append(Reason("power-bounded", "fail", dec.reason))
        reasons.append(
            Reason(
                "compact-at-infinity",
                "fail",
                "the orbit closure of an unbounded family cannot be compact",
            )
        )
        reasons.append(_gate_reason(sg, gate))
        return dec, ConvergenceReport(False, None, None, gate, reasons)

    reasons.append(
        Reason(
            "power-bounded",
            "pass",
            "spectrum inside the stability region with semisimple boundary part",
        )
    )
    reasons.append(
        Reason(
            "compact-at-infinity",
            "pass",
            "bounded orbit closure in finite dimension is compact",
        )
    )
    trivial = dec.group.kind == "trivial"
    if trivial:
        reasons.append(
            Reason(
                "peripheral-trivial",
                "pass",
                "no peripheral eigenvalue other than 1",
            )
        )
    else:
        vals = ", ".join(f"{lam:.6g}" for lam in dec.peripheral.eigenvalues)
        reasons.append(
            Reason(
                "peripheral-trivial",
                "fail",
                f"peripheral spectrum {{{vals}}} is not contained in {{1}}",
            )
        )
    reasons.append(_gate_reason(sg, gate))

    if gate and trivial and sg.mode == "continuous":
        A = sg.matrix
        if _is_metzler(A) and _log_norm(A, sg.norm_p) <= 1e-12:
            reasons.append(
                Reason(
                    "positive-and-contractive",
                    "pass",
                    "Metzler generator with nonpositive logarithmic norm: "
                    "a positive contraction flow on a divisible index set",
                )
            )

    if trivial:
        limit = dec.P_inf
        rank = int(round(float(np.trace(limit).real)))
        return dec, ConvergenceReport(True, limit, rank, gate, reasons)
    return dec, ConvergenceReport(False, None, None, gate, reasons)


def converges(sg):
    """Norm-convergence report for the sampled family.

    Converges exactly when the family is bounded and its peripheral spectrum
    is empty or the single semisimple eigenvalue 1 (frequency 0 for
    exponential families); the limit is then the projection at infinity.
    """
    _, rep = _base_report(sg)
    return rep


def abel_pole_probe(T, lam, steps=24):
    """Classify lam as resolvent point / simple pole / higher-order pole.

    Walks mu_k = lam * (1 + 2^-k) for k = 1..steps and watches
    D_k = (mu_k - lam) * R(mu_k). Decay below PROBE_EPS means lam is no
    pole; stabilization at a nonzero limit means a simple pole, and the
    limit (extrapolated from the last three iterates) is its residue
    projection; blow-up beyond 1/PROBE_EPS ends the walk early.
    """
    A = as_operator(T)
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > 1e-6:
        raise ValueError(f"probe point must be unimodular, got |lam|={abs(lam):.6g}")
    steps = int(steps)
    if steps < 4:
        raise ValueError("the probe needs at least 4 steps")
    schedule = []
    iterates = []
    norms = []
    for k in range(1, steps + 1):
        mu = lam * (1.0 + 2.0 ** (-k))
        schedule.append(mu)
        D = (mu - lam) * resolvent(A, mu)
        iterates.append(D)
        norms.append(float(np.linalg.norm(D, 2)))
        if norms[-1] > 1.0 / PROBE_EPS:
            return PoleProbeResult(
                "higher_order_pole", None, schedule, norms[-1], norms
            )
    if norms[-1] < PROBE_EPS:
        return PoleProbeResult("resolvent_point", None, schedule, norms[-1], norms)
    # two-level geometric extrapolation on the last three iterates
    e_prev = 2.0 * iterates[-2] - iterates[-3]
    e_last = 2.0 * iterates[-1] - iterates[-2]
    P = (4.0 * e_last - e_prev) / 3.0
    return PoleProbeResult("first_order_pole", P, schedule, norms[-1], norms)


def quasi_compactness_witness(T, max_power, max_rank):
    """Smallest (power, rank) with a rank-bounded approximant inside the ball.

    Searches n = 1..max_power and r = 0..max_rank for the truncated-SVD
    approximant K of T^n with ||T^n - K||_2 < 1; the first hit (smallest n,
    then smallest r) is returned with gap = 1 - ||T^n - K||_2, None if the
    budget is exhausted.
    """
    A = as_operator(T)
    max_power = int(max_power)
    max_rank = int(max_rank)
    if max_power < 1:
        raise ValueError("max_power must be at least 1")
    if max_rank < 0:
        raise ValueError("max_rank must be nonnegative")
    n = A.shape[0]
    W = np.eye(n, dtype=complex)
    for power in range(1, max_power + 1):
        W = W @ A
        sigma = np.linalg.svd(W, compute_uv=False)
        for r in range(0, min(max_rank, n) + 1):
            defect = float(sigma[r]) if r < n else 0.0
            if defect < 1.0 - 1e-12:
                return QuasiCompactWitness(power, r, 1.0 - defect)
    return None


def find_return_times(peripheral_args, eps, n_max):
    """Smallest n in [1, n_max] with max_i |e^{i n theta_i} - 1| < eps.

    Returns None when the horizon is exhausted; the empty tuple returns 1.
    """
    eps = float(eps)
    n_max = int(n_max)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    thetas = np.asarray(list(peripheral_args), dtype=float)
    if thetas.size == 0:
        return 1
    block = 1 << 16
    for start in range(1, n_max + 1, block):
        ns = np.arange(start, min(start + block, n_max + 1))
        dist = 2.0 * np.abs(np.sin(np.outer(ns, thetas) / 2.0))
        ok = dist.max(axis=1) < eps
        if ok.any():
            return int(ns[np.argmax(ok)])
    return None


def _validate_positive_entries(sg, tol=1e-12):
    M = sg.matrix
    if np.any(np.abs(M.imag) > tol):
        raise ValueError("positivity checks require a real matrix")
    R = M.real
    if sg.mode == "discrete":
        idx = np.unravel_index(int(np.argmin(R)), R.shape)
        if R[idx] < -tol:
            raise PositivityError(idx, float(R[idx]), "matrix")
    else:
        off = R.copy()
        np.fill_diagonal(off, 0.0)
        idx = np.unravel_index(int(np.argmin(off)), off.shape)
        if off[idx] < -tol:
            raise PositivityError(idx, float(R[idx]), "generator off-diagonal")


def _cyclicity_reason(sg, dec, closure_tol, k_max=10_000, order_tol=1e-9):
    """Peripheral set closed under powers of each member (positive input)."""
    if not dec.exists_compact:
        return Reason(
            "cyclic-peripheral-spectrum",
            "indeterminate",
            "peripheral structure unavailable for an unbounded family",
        )
    eigs = [complex(lam) / abs(lam) for lam in dec.peripheral.eigenvalues]
    if sg.mode == "continuous":
        betas = dec.group.peripheral_arguments
        if all(abs(b) <= UNIT_CIRCLE_TOL for b in betas):
            return Reason(
                "cyclic-peripheral-spectrum",
                "pass",
                "positive bounded flow: the only boundary frequency is 0",
            )
        return Reason(
            "cyclic-peripheral-spectrum",
            "fail",
            f"nonzero boundary frequencies {betas} contradict positivity",
        )
    orders = []
    for lam in eigs:
        order = _root_of_unity_order(lam, k_max, order_tol)
        if order is None:
            return Reason(
                "cyclic-peripheral-spectrum",
                "indeterminate",
                f"no root-of-unity order found for {lam:.6g} within k <= {k_max}",
            )
        orders.append(order)
    for lam, order in zip(eigs, orders):
        theta = float(np.angle(lam))
        for j in range(1, order):
            target = complex(np.exp(1j * j * theta))
            if min(abs(target - mu) for mu in eigs) > closure_tol:
                return Reason(
                    "cyclic-peripheral-spectrum",
                    "fail",
                    f"power {lam:.6g}^{j} is missing from the peripheral set",
                )
    return Reason(
        "cyclic-peripheral-spectrum",
        "pass",
        f"peripheral set closed under powers of each member (orders {orders})",
    )


def positive_convergence_check(sg, tol=1e-12, closure_tol=1e-7):
    """Convergence report for an entrywise-positive family.

    Requires nonnegative entries (power families) or a Metzler generator
    (exponential families). Adds a cyclicity reason: the peripheral
    eigenvalues of a positive bounded family form full root-of-unity groups,
    and the verdict records whether that structure is confirmed.
    """
    _validate_positive_entries(sg, tol)
    dec, rep = _base_report(sg)
    rep.reasons.append(_cyclicity_reason(sg, dec, closure_tol))
    return rep


def strong_positivity_convergence(sg, tol=1e-12, t_max=50.0, horizon=None):
    """Convergence report with an interior-orbit (strict positivity) check.

    Scans sampled times for each basis direction until its image becomes
    entrywise strictly positive; when every direction does, the family is
    primitive-like and the limit has rank at most 1. An exhausted horizon
    yields an indeterminate verdict, never a refutation, and the convergence
    verdict itself always comes from the spectral splitting.
    """
    _validate_positive_entries(sg, tol)
    n = sg.dim
    if sg.mode == "discrete":
        if horizon is None:
            horizon = max(1, (n - 1) ** 2 + 1)
        times = list(range(1, int(horizon) + 1))
    else:
        times = [t_max * 2.0 ** (j - 11) for j in range(12)]
    pending = set(range(n))
    for s in times:
        if not pending:
            break
        Ts = sample(sg, s).real
        for i in list(pending):
            if np.min(Ts[:, i]) > tol:
                pending.discard(i)
    dec, rep = _base_report(sg)
    if not pending:
        anchor = (
            "every basis direction reaches a strictly positive image "
            "within the sampled horizon"
        )
        if rep.converges and (rep.limit_rank or 0) <= 1:
            anchor += f"; limit rank {rep.limit_rank} confirmed"
        rep.reasons.append(Reason("strong-positivity", "pass", anchor))
    else:
        i = min(pending)
        rep.reasons.append(
            Reason(
                "strong-positivity",
                "indeterminate",
                f"basis direction e_{i} never became strictly positive "
                f"within the sampled horizon",
            )
        )
    return rep


def subsemigroup_consistency(sg, s0, tol=1e-8):
    """Compare the flow projection with the one of the sampled power family.

    Computes P_inf for (e^{tA}) and for the powers of e^{s0 A}; reports
    whether they coincide within tol and the 2-norm deviation. The aliasing
    flag marks distinct boundary frequencies that the sampling maps to the
    same unimodular eigenvalue; such cases are flagged, not judged.
    """
    if sg.mode != "continuous":
        raise ValueError("subsemigroup comparison needs an exponential family")
    s0 = float(s0)
    if s0 <= 0:
        raise ValueError(f"sampling step must be positive, got {s0}")
    dec_c = infinity_decomposition(sg)
    if not dec_c.exists_compact:
        raise ValueError(f"flow is not bounded: {dec_c.reason}")
    betas = dec_c.group.peripheral_arguments
    aliasing = False
    for j in range(len(betas)):
        for k in range(j + 1, len(betas)):
            gap = abs(np.exp(1j * s0 * betas[j]) - np.exp(1j * s0 * betas[k]))
            if gap <= tol:
                aliasing = True
    T0 = sample(sg, s0)
    dec_d = infinity_decomposition(discrete_semigroup(T0, sg.norm_p))
    if not dec_d.exists_compact:
        return SubsemigroupCheck(False, math.inf, aliasing)
    deviation = float(np.linalg.norm(dec_c.P_inf - dec_d.P_inf, 2))
    return SubsemigroupCheck(deviation <= tol, deviation, aliasing)


def sqrt2_gap_check(T, tol=1e-9):
    """Distance of a positive doubly power-bounded matrix from the identity.

    Such matrices are monomial up to similarity, and their distance to the
    identity is either 0 or at least sqrt(2); the check reports
    ||T - I||_2 and whether it respects that dichotomy.
    """
    A = as_operator(T)
    if np.any(np.abs(A.imag) > 1e-12):
        raise ValueError("the gap check requires a real matrix")
    R = A.real
    idx = np.unravel_index(int(np.argmin(R)), R.shape)
    if R[idx] < -1e-12:
        raise PositivityError(idx, float(R[idx]), "matrix")
    dec = eig_decompose(A)
    for it in dec.items:
        if abs(abs(it.eigenvalue) - 1.0) > UNIT_CIRCLE_TOL:
            raise ValueError(
                f"eigenvalue {it.eigenvalue:.6g} is not unimodular; the "
                f"matrix is not doubly power-bounded"
            )
    for it in dec.items:
        if it.pole_order != 1:
            raise ValueError(
                f"eigenvalue {it.eigenvalue:.6g} is not semisimple "
                f"(resolvent pole order {it.pole_order})"
            )
    dist = float(np.linalg.norm(A - np.eye(A.shape[0]), 2))
    ok = dist <= tol or dist >= math.sqrt(2.0) - tol
    return bool(ok), dist
