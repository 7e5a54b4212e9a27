"""Dense spectral machinery for square complex matrices.

The central routine is :func:`eig_decompose`, which returns the full spectral
decomposition of a matrix: clustered eigenvalues, spectral projections,
nilpotent parts and resolvent pole orders. Projections are obtained by
reordering a single complex Schur form so that each cluster occupies the
leading block and solving a triangular Sylvester equation for the coupling;
no contour integration and no explicit generalized eigenvectors.

Also provides resolvents, induced p-norms, the logarithmic sup-norm,
matrix exponentials and numerical rank.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .exceptions import EigenSolverError, SpectralPointError

__all__ = [
    "SpectralItem",
    "SpectralDecomposition",
    "PeripheralSet",
    "as_operator",
    "eig_decompose",
    "resolvent",
    "induced_norm",
    "log_norm_inf",
    "matrix_exponential",
    "numerical_rank",
]

#: eigenvalues are merged when closer than DEFAULT_CLUSTER_FACTOR * ||M||_2
DEFAULT_CLUSTER_FACTOR = 1e-8

#: matrix entries below NILPOTENT_FACTOR * ||M||_2 count as zero when
#: measuring nilpotency indices
NILPOTENT_FACTOR = 1e-8


def as_operator(M):
    """Validate M as a square, finite matrix and return it as complex128."""
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValueError("empty matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return np.ascontiguousarray(A, dtype=complex)


@dataclass
class SpectralItem:
    """One clustered eigenvalue with its invariant-subspace data."""

    eigenvalue: complex
    algebraic_mult: int
    geometric_mult: int
    projection: np.ndarray
    nilpotent: np.ndarray
    pole_order: int


@dataclass
class SpectralDecomposition:
    """Full spectral decomposition M = sum(lambda P + N) over items."""

    items: list
    cluster_tol: float

    @property
    def eigenvalues(self):
        return [it.eigenvalue for it in self.items]

    def nearest_item(self, lam):
        """Item whose eigenvalue is closest to lam."""
        return min(self.items, key=lambda it: abs(it.eigenvalue - lam))


@dataclass
class PeripheralSet:
    """Eigenvalues found within tol of the circle of given radius."""

    circle_radius: float
    eigenvalues: list
    tol: float = 1e-8

    @property
    def arguments(self):
        """Arguments theta with lambda = radius * e^{i theta}."""
        return [float(np.angle(lam)) for lam in self.eigenvalues]

    def __len__(self):
        return len(self.eigenvalues)


def _cluster_indices(lams, tol):
    """Greedy union of eigenvalues within tol; returns list of index lists."""
    n = len(lams)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lams[i] - lams[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _reorder_schur(T, Z, positions):
    """Move the Schur diagonal entries at `positions` to the leading block.

    Returns (T2, Z2) with M = Z2 @ T2 @ Z2^H and the selected eigenvalues
    occupying the first len(positions) diagonal slots.
    """
    T2 = np.asfortranarray(T.copy())
    Z2 = np.asfortranarray(Z.copy())
    # ascending order keeps the not-yet-moved positions valid: each swap
    # chain only shifts diagonal entries strictly left of the moved one
    for target, pos in enumerate(sorted(positions)):
        if pos == target:
            continue
        T2, Z2, info = lapack.ztrexc(T2, Z2, pos + 1, target + 1)
        if info != 0:
            raise EigenSolverError(f"Schur reordering failed (info={info})")
    return T2, Z2


def _cluster_projection(T, Z, positions, n):
    """Spectral projection for the cluster at the given Schur positions."""
    k = len(positions)
    if k == n:
        return np.eye(n, dtype=complex)
    T2, Z2 = _reorder_schur(T, Z, positions)
    T11 = T2[:k, :k]
    T12 = T2[:k, k:]
    T22 = T2[k:, k:]
    # coupling R solves T11 R - R T22 = T12
    R = scipy.linalg.solve_sylvester(T11, -T22, T12)
    Pi = np.zeros((n, n), dtype=complex)
    Pi[:k, :k] = np.eye(k)
    Pi[:k, k:] = R
    return Z2 @ Pi @ Z2.conj().T


def eig_decompose(M, cluster_tol=None):
    """Spectral decomposition with projections, nilpotents and pole orders.

    Parameters
    ----------
    M : array_like
        Square complex matrix.
    cluster_tol : float, optional
        Eigenvalues closer than this are merged into a single spectral item
        (greedy union). Defaults to 1e-8 * ||M||_2.

    Returns
    -------
    SpectralDecomposition
        Items satisfy sum(P) = I, P_i P_j = 0 (i != j), and
        M = sum(lambda P + N) with N^pole_order = 0.
    """
    A = as_operator(M)
    n = A.shape[0]
    scale = np.linalg.norm(A, 2)
    if cluster_tol is None:
        cluster_tol = DEFAULT_CLUSTER_FACTOR * max(scale, 1e-300)
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")

    try:
        T, Z = scipy.linalg.schur(A, output="complex")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise EigenSolverError(f"Schur factorization failed: {exc}") from exc
    resid = np.linalg.norm(Z @ T @ Z.conj().T - A, 2)
    if not np.isfinite(resid) or resid > 1e-6 * max(1.0, scale):
        raise EigenSolverError(
            "eigen-solver did not converge", residual=float(resid)
        )

    lams = np.diag(T)
    zero_thresh = NILPOTENT_FACTOR * max(scale, 1e-300)
    items = []
    for positions in _cluster_indices(lams, cluster_tol):
        lam = complex(np.mean(lams[positions]))
        P = _cluster_projection(T, Z, positions, n)
        N = (A - lam * np.eye(n)) @ P
        # pole order = nilpotency index of N, at most the cluster size
        m = len(positions)
        pole_order = m
        K = np.eye(n, dtype=complex)
        for k in range(1, m + 1):
            K = K @ N
            if np.linalg.norm(K, 2) <= zero_thresh:
                pole_order = k
                break
        if np.linalg.norm(N, 2) <= zero_thresh:
            N = np.zeros_like(N)
            rank_N = 0
        else:
            rank_N = int(
                np.count_nonzero(np.linalg.svd(N, compute_uv=False) > zero_thresh)
            )
        items.append(
            SpectralItem(
                eigenvalue=lam,
                algebraic_mult=len(positions),
                geometric_mult=len(positions) - rank_N,
                projection=P,
                nilpotent=N,
                pole_order=pole_order,
            )
        )
    items.sort(key=lambda it: (-abs(it.eigenvalue), np.angle(it.eigenvalue)))
    return SpectralDecomposition(items=items, cluster_tol=float(cluster_tol))


def resolvent(M, mu, tol=1e-8):
    """Resolvent (mu I - M)^(-1).

    Raises SpectralPointError when mu is numerically a spectral point (the
    solve is singular or its residual exceeds tol relative to the result).
    """
    A = as_operator(M)
    n = A.shape[0]
    shifted = complex(mu) * np.eye(n) - A
    try:
        # the solve may hit an exactly singular shift; that path is reported
        # as a spectral point below, so keep numpy quiet about it
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            X = scipy.linalg.solve(shifted, np.eye(n, dtype=complex))
            resid = np.linalg.norm(shifted @ X - np.eye(n), 2)
        bad = not np.all(np.isfinite(X)) or resid > tol * max(
            1.0, np.linalg.norm(X, 2)
        )
    except scipy.linalg.LinAlgError:
        bad = True
    if bad:
        lams = np.linalg.eigvals(A)
        j = int(np.argmin(np.abs(lams - mu)))
        raise SpectralPointError(mu, lams[j], abs(lams[j] - mu))
    return X


def induced_norm(M, p):
    """Induced operator p-norm for p in {1, 2, inf}.

    Max absolute column sum (p=1), largest singular value (p=2), max
    absolute row sum (p=inf).
    """
    A = as_operator(M)
    if p == 1:
        return float(np.max(np.sum(np.abs(A), axis=0)))
    if p == 2:
        return float(np.linalg.norm(A, 2))
    if p in (np.inf, "inf"):
        return float(np.max(np.sum(np.abs(A), axis=1)))
    raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


def log_norm_inf(M):
    """Logarithmic sup-norm: max_i ( M_ii + sum_{j != i} |M_ij| ).

    Nonpositive iff e^{tM} is a sup-norm contraction for all t >= 0.
    Requires a real matrix.
    """
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.iscomplexobj(A) and np.any(A.imag != 0):
        raise ValueError("log_norm_inf requires a real matrix")
    A = A.real.astype(float)
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    return float(np.max(np.diag(A) + off))


def _log_norm(A, p):
    # general complex logarithmic norm, internal use (growth-rate bounds)
    A = np.asarray(A, dtype=complex)
    if p == 1:
        off = np.sum(np.abs(A), axis=0) - np.abs(np.diag(A))
        return float(np.max(np.diag(A).real + off))
    if p == 2:
        H = (A + A.conj().T) / 2.0
        return float(np.max(np.linalg.eigvalsh(H)))
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    return float(np.max(np.diag(A).real + off))


def matrix_exponential(A, t):
    """e^{tA} by scaling and squaring (scipy.linalg.expm).

    t must be nonnegative; overflow raises OverflowError.
    """
    B = as_operator(A)
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if t == 0.0:
        return np.eye(B.shape[0], dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(t * B)
    if not np.all(np.isfinite(E)):
        raise OverflowError(f"matrix exponential overflowed at t={t}")
    return E


def numerical_rank(M, rel_tol):
    """Number of singular values exceeding rel_tol * sigma_max; 0 for M = 0."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    A = as_operator(M)
    sigma = np.linalg.svd(A, compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rel_tol * sigma[0]))
