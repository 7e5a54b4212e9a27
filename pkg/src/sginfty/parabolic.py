"""Drift-diffusion demo on a box: assembly, stepping, convergence probes.

Space is the cube [-L, L]^d (d = 1 or 2) with a uniform grid and mirror
(no-flux) boundaries.  The scalar transport operator is

    B u = laplacian(u) - (1 + |x|^2)^beta x . grad(u),

discretised with central second differences and first-order upwinding
for the drift; mirror ghost nodes fold boundary stencils back inside,
so constants lie in the kernel of B.  Two species are coupled pointwise
through a 2x2 potential built from two nonnegative scalar fields,

    V(x) = v(x) M1 + w(x) M2,

where M1 and M2 are fixed coupling patterns.  The defaults make every
V(x) dissipative in the sup norm and annihilate the (1, -1) field, so
the pair (ones, -ones) is a steady state of the coupled system.

Unknowns are stored component-major: the first m entries hold species
one on the m grid points, the next m entries species two.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .exceptions import PositivityError
from .fields import FieldExpr, parse_field
from .spectral import induced_norm, numerical_rank

__all__ = [
    "Grid",
    "GridOperator",
    "MeasurementReport",
    "PotentialSpec",
    "ProbeRow",
    "Propagator",
    "assemble_operator",
    "build_propagator",
    "check_dissipativity",
    "check_lyapunov",
    "measure_convergence",
]

N_COMPONENTS = 2

# dense snapshots above this many unknowns are refused
DENSE_LIMIT = 4000

# consecutive snapshots closer than this count as settled
SETTLE_TOL = 1e-6

# drift-to-diffusion cell ratio beyond which the grid is flagged as too coarse
RESOLUTION_FACTOR = 1e3

_DEFAULT_M1 = ((-1.0, -1.0), (-2.0, -2.0))
_DEFAULT_M2 = ((-1.0, -1.0), (-1.0, -1.0))


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-half_width, half_width]^dim."""

    dim: int
    half_width: float
    spacing: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not 0 < self.spacing <= self.half_width:
            raise ValueError("spacing must lie in (0, half_width]")
        ratio = 2.0 * self.half_width / self.spacing
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("spacing must divide the box width 2*half_width")

    @property
    def n_per_axis(self):
        return int(round(2.0 * self.half_width / self.spacing)) + 1

    @property
    def n_points(self):
        return self.n_per_axis**self.dim

    @property
    def axis(self):
        return np.linspace(-self.half_width, self.half_width, self.n_per_axis)

    @property
    def points(self):
        """All grid points, shape (n_points, dim), first axis slowest."""
        axes = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)


def _as_field(value, label):
    if isinstance(value, FieldExpr):
        return value
    if isinstance(value, str):
        return parse_field(value)
    if callable(value):
        return value
    try:
        const = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"field {label!r} must be a number, expression or callable")
    return const


class PotentialSpec:
    """Two nonnegative scalar fields and their 2x2 coupling patterns.

    ``v`` and ``w`` may be constants, grammar strings (see
    :mod:`sginfty.fields`) or callables taking an (m, dim) point array.
    """

    def __init__(self, v, w, beta, couplings=None):
        if not float(beta) > 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)
        self.v = _as_field(v, "v")
        self.w = _as_field(w, "w")
        if couplings is None:
            couplings = (np.array(_DEFAULT_M1), np.array(_DEFAULT_M2))
        m1 = np.asarray(couplings[0], dtype=float)
        m2 = np.asarray(couplings[1], dtype=float)
        want = (N_COMPONENTS, N_COMPONENTS)
        if m1.shape != want or m2.shape != want:
            raise ValueError(f"coupling patterns must have shape {want}")
        self.couplings = (m1, m2)

    def v_values(self, grid):
        return _field_values(self.v, grid, "v")

    def w_values(self, grid):
        return _field_values(self.w, grid, "w")


def _field_values(f, grid, label):
    m = grid.n_points
    if isinstance(f, float):
        values = np.full(m, f)
    else:
        values = np.asarray(f(grid.points), dtype=float)
        if values.shape != (m,):
            raise ValueError(
                f"field {label!r} returned shape {values.shape}, expected ({m},)"
            )
    worst = int(np.argmin(values))
    if values[worst] < -1e-12:
        raise PositivityError((worst,), float(values[worst]), context=f"field {label!r}")
    return values


@dataclass
class GridOperator:
    """Assembled generator together with its three structural parts."""

    matrix: sp.csr_matrix
    diffusion: sp.csr_matrix
    drift: sp.csr_matrix
    potential: sp.csr_matrix
    grid: Grid
    pot: PotentialSpec
    drift_warning: Optional[str] = None

    @property
    def shape(self):
        return self.matrix.shape


def _scalar_stencils(grid, beta):
    """Diffusion and upwind drift matrices for a single component."""
    m = grid.n_points
    n1 = grid.n_per_axis
    h = grid.spacing
    inv_h2 = 1.0 / (h * h)
    pts = grid.points
    r2 = np.sum(pts * pts, axis=1)
    b = -((1.0 + r2) ** beta)[:, None] * pts

    idx = np.arange(m)
    multi = np.unravel_index(idx, (n1,) * grid.dim)

    rows_d, cols_d, vals_d = [], [], []
    rows_a, cols_a, vals_a = [], [], []
    for axis in range(grid.dim):
        coord = multi[axis]
        stride = n1 ** (grid.dim - 1 - axis)
        # mirror ghosts: stepping off the box folds back to the inner neighbour
        west = np.where(coord == 0, idx + stride, idx - stride)
        east = np.where(coord == n1 - 1, idx - stride, idx + stride)

        rows_d.extend([idx, idx, idx])
        cols_d.extend([west, east, idx])
        vals_d.extend(
            [np.full(m, inv_h2), np.full(m, inv_h2), np.full(m, -2.0 * inv_h2)]
        )

        bj = b[:, axis]
        weight = np.abs(bj) / h
        upwind = np.where(bj > 0, east, west)
        rows_a.extend([idx, idx])
        cols_a.extend([upwind, idx])
        vals_a.extend([weight, -weight])

    def build(rows, cols, vals):
        coo = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, m),
        )
        return coo.tocsr()

    diffusion = build(rows_d, cols_d, vals_d)
    drift = build(rows_a, cols_a, vals_a)
    peclet = float(np.max(np.abs(b))) * h
    return diffusion, drift, peclet


def assemble_operator(grid, pot):
    """Assemble the coupled two-species generator on ``grid``."""
    m = grid.n_points
    diffusion_1, drift_1, peclet = _scalar_stencils(grid, pot.beta)
    diffusion = sp.block_diag([diffusion_1, diffusion_1], format="csr")
    drift = sp.block_diag([drift_1, drift_1], format="csr")

    vvals = pot.v_values(grid)
    wvals = pot.w_values(grid)
    m1, m2 = pot.couplings
    blocks = [
        [
            sp.diags(vvals * m1[k, l] + wvals * m2[k, l])
            for l in range(N_COMPONENTS)
        ]
        for k in range(N_COMPONENTS)
    ]
    potential = sp.bmat(blocks, format="csr")

    warning = None
    if peclet > RESOLUTION_FACTOR:
        warning = (
            f"drift is under-resolved: max |b| * spacing = {peclet:.3g} "
            f"exceeds {RESOLUTION_FACTOR:g} times the unit diffusion"
        )

    matrix = (diffusion + drift + potential).tocsr()
    return GridOperator(
        matrix=matrix,
        diffusion=diffusion,
        drift=drift,
        potential=potential,
        grid=grid,
        pot=pot,
        drift_warning=warning,
    )


def check_dissipativity(pot, grid):
    """Worst sup-norm log norm of V(x) over the grid.

    Returns ``(ok, worst)`` where ok means no row of any V(x) has
    positive diagonal-plus-off-diagonal mass.
    """
    vvals = pot.v_values(grid)
    wvals = pot.w_values(grid)
    m1, m2 = pot.couplings
    worst = -np.inf
    for k in range(N_COMPONENTS):
        row = vvals * m1[k, k] + wvals * m2[k, k]
        for l in range(N_COMPONENTS):
            if l != k:
                row = row + np.abs(vvals * m1[k, l] + wvals * m2[k, l])
        worst = max(worst, float(np.max(row)))
    return worst <= 1e-12, worst


def check_lyapunov(grid, beta, lambda0):
    """Margin of the drift condition for the weight 1 + |x|^2.

    The weight phi(x) = 1 + |x|^2 satisfies lambda0*phi - B phi =
    lambda0*(1 + |x|^2) - 2*dim + 2*|x|^2 (1 + |x|^2)^beta pointwise;
    returns ``(ok, worst)`` with the minimum of that expression over
    the grid.
    """
    r2 = np.sum(grid.points**2, axis=1)
    resid = lambda0 * (1.0 + r2) - 2.0 * grid.dim + 2.0 * r2 * (1.0 + r2) ** beta
    worst = float(resid.min())
    return worst >= -1e-12, worst


class Propagator:
    """Implicit time stepper for du/dt = L u with a one-off factorisation."""

    def __init__(self, op, tau, scheme="implicit_euler"):
        if scheme not in ("implicit_euler", "crank_nicolson"):
            raise ValueError(f"unknown scheme {scheme!r}")
        if not float(tau) > 0:
            raise ValueError("tau must be positive")
        self.operator = op if isinstance(op, GridOperator) else None
        gen = op.matrix if isinstance(op, GridOperator) else op
        if sp.issparse(gen):
            gen = gen.tocsc().astype(float)
        else:
            gen = sp.csc_matrix(np.atleast_2d(np.asarray(gen, dtype=float)))
        if gen.shape[0] != gen.shape[1]:
            raise ValueError("generator must be square")
        self.generator = gen
        self.tau = float(tau)
        self.scheme = scheme

        eye = sp.identity(gen.shape[0], format="csc")
        if scheme == "implicit_euler":
            left = eye - self.tau * gen
            self._rhs = None
        else:
            left = eye - (self.tau / 2.0) * gen
            self._rhs = (eye + (self.tau / 2.0) * gen).tocsr()
        try:
            self._solver = splu(left.tocsc())
        except RuntimeError as exc:
            raise ValueError(
                f"implicit step matrix is singular for tau={tau}: {exc}"
            ) from None

    @property
    def dim(self):
        return self.generator.shape[0]

    def step_count(self, t):
        """Number of steps for time ``t``; t must be a multiple of tau."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        k = round(t / self.tau)
        if abs(t - k * self.tau) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a multiple of the step tau={self.tau}")
        return int(k)

    def advance(self, state, n_steps):
        """Apply ``n_steps`` scheme steps to a vector or matrix of columns."""
        x = state
        for _ in range(n_steps):
            if self._rhs is not None:
                x = self._rhs @ x
            x = self._solver.solve(x)
        return x

    def dense_snapshot(self, t):
        """The full propagation matrix at time ``t`` (a multiple of tau)."""
        n = self.dim
        if n > DENSE_LIMIT:
            raise ValueError(
                f"dense snapshots are limited to {DENSE_LIMIT} unknowns, "
                f"the operator has {n}"
            )
        return self.advance(np.eye(n), self.step_count(t))


def build_propagator(op, tau, scheme="implicit_euler"):
    """Factorise the implicit step for ``op`` (a GridOperator or matrix)."""
    return Propagator(op, tau, scheme)


class ProbeRow(NamedTuple):
    t: float
    diff_norm: float
    op_norm: float
    rank: int


@dataclass
class MeasurementReport:
    """Time series of snapshot probes plus the settling summary."""

    rows: list
    reached: bool
    t_star: Optional[float]
    rank_at_t_star: Optional[int]
    limit_rank: Optional[int]
    idempotency_defect: Optional[float]


def _floored_rank(mat, rel_tol=1e-8):
    # absolute floor of 1 keeps a decaying snapshot from counting its own
    # vanishing scale as full rank
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > rel_tol * max(1.0, float(s[0]))))


def measure_convergence(prop, t_max, probe_interval):
    """Walk snapshots every ``probe_interval`` up to ``t_max``.

    Each row records (t, ||T_{t+d} - T_t||_inf, ||T_t||_inf,
    numerical rank of T_t).  The summary reports the first probe time
    t* whose consecutive difference drops below 1e-6, the rank there,
    the rank of T_{2 t*} with an absolute floor on the scale, and the
    idempotency defect ||T_{2 t*} - T_{t*}||_inf.
    """
    if not probe_interval > 0:
        raise ValueError("probe_interval must be positive")
    if not t_max >= 2 * probe_interval:
        raise ValueError("t_max must cover at least two probe intervals")
    ratio = probe_interval / prop.tau
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
        raise ValueError("probe_interval must be a multiple of the step tau")
    n = prop.dim
    if n > DENSE_LIMIT:
        raise ValueError(
            f"dense snapshots are limited to {DENSE_LIMIT} unknowns, "
            f"the operator has {n}"
        )

    n_probes = int(np.floor(t_max / probe_interval + 1e-9))
    rows = []
    star_index = None
    star_snapshot = None
    current = prop.advance(np.eye(n), steps)
    for k in range(1, n_probes):
        nxt = prop.advance(current, steps)
        diff = induced_norm(nxt - current, np.inf)
        rows.append(
            ProbeRow(
                t=k * probe_interval,
                diff_norm=float(diff),
                op_norm=float(induced_norm(current, np.inf)),
                rank=numerical_rank(current, 1e-8),
            )
        )
        if star_index is None and diff < SETTLE_TOL:
            star_index = k
            star_snapshot = current.copy()
        current = nxt

    if star_index is None:
        return MeasurementReport(
            rows=rows,
            reached=False,
            t_star=None,
            rank_at_t_star=None,
            limit_rank=None,
            idempotency_defect=None,
        )

    doubled = prop.advance(star_snapshot.copy(), star_index * steps)
    return MeasurementReport(
        rows=rows,
        reached=True,
        t_star=star_index * probe_interval,
        rank_at_t_star=numerical_rank(star_snapshot, 1e-8),
        limit_rank=_floored_rank(doubled),
        idempotency_defect=float(induced_norm(doubled - star_snapshot, np.inf)),
    )
