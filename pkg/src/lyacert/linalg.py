"""Deterministic dense linear algebra kernel.

Matrix exponentials, exact block-augmented time integrals, spectral
quantities, induced and nuclear norms, and the orthonormal coordinates on
Sym(n) used by the Lyapunov machinery.  Everything here is a pure function
of its inputs.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, NotStableError, NumericalError

__all__ = [
    "SpaceNorm",
    "GrowthBound",
    "NormInterval",
    "as_matrix",
    "as_square",
    "as_vector",
    "check_symmetric",
    "vector_norm",
    "expm",
    "expm_grid",
    "integral_exp",
    "cesaro_integral",
    "gramian_integral",
    "eigenvalues",
    "spectral_abscissa",
    "growth_fit",
    "induced_norm",
    "nuclear_norm",
    "sym_basis",
    "sym_to_vec",
    "vec_to_sym",
    "sym_dim",
]

#: absolute floor for relative tolerances throughout the package
TOL_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceNorm:
    """An l_p norm on R^dim, p in {1, 2, inf} or any p in (1, inf)."""

    p: float
    dim: int

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def q(self):
        """Dual exponent: 1/p + 1/q = 1 (q = inf when p = 1)."""
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


@dataclass(frozen=True)
class GrowthBound:
    """Exponential envelope ||e^{tA}|| <= M * exp(-eps * t) on a sampled grid."""

    M: float
    eps: float

    def __post_init__(self):
        if not (math.isfinite(self.M) and self.M >= 1.0):
            raise ValueError(f"growth constant must satisfy M >= 1, got {self.M}")
        if not (math.isfinite(self.eps) and self.eps > 0.0):
            raise ValueError(f"decay rate must be positive, got {self.eps}")


class NormInterval(NamedTuple):
    """Certified enclosure [lower, upper] of a norm with no closed form."""

    lower: float
    upper: float

    @property
    def ratio(self):
        return self.upper / self.lower if self.lower > 0 else math.inf


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be nonempty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def as_vector(x, dim=None, name="vector"):
    v = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} must have length {dim}, got {v.size}")
    return v


def check_symmetric(a, name="matrix", rtol=1e-12):
    """Validate symmetry within rtol * scale and return the symmetrized matrix."""
    m = as_square(a, name)
    scale = max(np.abs(m).max(), 1.0)
    defect = np.abs(m - m.T).max()
    if defect > rtol * scale:
        raise ValueError(
            f"{name} is not symmetric: defect {defect:.3e} exceeds {rtol:.0e} * scale"
        )
    return 0.5 * (m + m.T)


def vector_norm(x, p):
    """l_p norm, p in [1, inf]."""
    return float(np.linalg.norm(np.asarray(x, dtype=float).ravel(), ord=p))


def _pvalue(p):
    """Accept a SpaceNorm or a bare exponent."""
    return float(p.p) if isinstance(p, SpaceNorm) else float(p)


# ---------------------------------------------------------------------------
# Matrix exponential and exact time integrals
# ---------------------------------------------------------------------------

def expm(A, t=1.0):
    """e^{tA} by scaling-and-squaring with the degree-13 Pade approximant.

    Parameters
    ----------
    A : (n, n) array_like
        Generator.
    t : float
        Nonnegative time (t = 0 returns the identity exactly).
    """
    A = as_square(A, "A")
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(t * A)


def expm_grid(A, horizon, steps):
    """e^{tA} on the uniform grid t_k = k*horizon/steps, k = 0..steps.

    One expm call; subsequent grid points filled in by repeated
    multiplication with e^{dt*A}, which keeps a dense sweep cheap.
    """
    A = as_square(A, "A")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = A.shape[0]
    dt = float(horizon) / steps
    F = expm(A, dt)
    out = np.empty((steps + 1, n, n))
    out[0] = np.eye(n)
    for k in range(1, steps + 1):
        out[k] = out[k - 1] @ F
    ts = np.linspace(0.0, float(horizon), steps + 1)
    return ts, out


def integral_exp(A, t):
    """Integrated semigroup S(t) = int_0^t e^{sA} ds, computed exactly.

    Uses the top-right block of exp(t * [[A, I], [0, 0]]); no quadrature.
    """
    A = as_square(A, "A")
    t = float(t)
    if t < 0:
        raise ValueError("time must be nonnegative")
    n = A.shape[0]
    if t == 0.0:
        return np.zeros((n, n))
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = A
    M[:n, n:] = np.eye(n)
    E = scipy.linalg.expm(t * M)
    return E[:n, n:]


def cesaro_integral(A, t):
    """int_0^t S(tau) dtau via a doubly augmented block exponential.

    Top-right block of exp(t * [[A, I, 0], [0, 0, I], [0, 0, 0]]); the
    caller divides by t for the Cesaro average.
    """
    A = as_square(A, "A")
    t = float(t)
    if t < 0:
        raise ValueError("time must be nonnegative")
    n = A.shape[0]
    if t == 0.0:
        return np.zeros((n, n))
    M = np.zeros((3 * n, 3 * n))
    M[:n, :n] = A
    M[:n, n : 2 * n] = np.eye(n)
    M[n : 2 * n, 2 * n :] = np.eye(n)
    E = scipy.linalg.expm(t * M)
    return E[:n, 2 * n :]


def gramian_integral(A, Q, t):
    """W(t) = int_0^t e^{sA'} Q e^{sA} ds via the 2n-block exponential.

    With E = exp(t * [[-A', Q], [0, A]]) partitioned into n x n blocks,
    W(t) = E22' @ E12 (Van Loan's construction); exact up to expm accuracy.
    """
    A = as_square(A, "A")
    Q = as_square(Q, "Q")
    if Q.shape != A.shape:
        raise DimensionError(f"Q must match A, got {Q.shape} vs {A.shape}")
    t = float(t)
    if t < 0:
        raise ValueError("time must be nonnegative")
    n = A.shape[0]
    if t == 0.0:
        return np.zeros((n, n))
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A.T
    M[:n, n:] = Q
    M[n:, n:] = A
    E = scipy.linalg.expm(t * M)
    W = E[n:, n:].T @ E[:n, n:]
    return 0.5 * (W + W.T)


# ---------------------------------------------------------------------------
# Spectral quantities
# ---------------------------------------------------------------------------

def eigenvalues(A):
    """Eigenvalues of A; symmetric input routes to the symmetric solver."""
    A = as_square(A, "A")
    try:
        if np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max())):
            return np.linalg.eigvalsh(A).astype(complex)
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on shape {A.shape}: {exc}") from exc


def spectral_abscissa(A):
    """max Re(lambda) over the spectrum of A."""
    return float(np.max(eigenvalues(A).real))


#: safety margin between the spectral bound and the certified decay rate
GROWTH_MARGIN = 0.05


def growth_fit(A, horizon=None, steps=200):
    """Fit a certified envelope ||e^{tA}|| <= M e^{-eps t} on a uniform grid.

    eps is the spectral abscissa shrunk by a fixed 5% margin, which
    guarantees a finite M on any grid; M is the grid maximum of
    ||e^{tA}||_2 * e^{eps t}.

    Raises
    ------
    NotStableError
        If the spectral abscissa is not negative.
    """
    A = as_square(A, "A")
    alpha = spectral_abscissa(A)
    if alpha >= 0.0:
        raise NotStableError(f"generator is not stable: spectral abscissa {alpha:.3e}")
    eps = -alpha * (1.0 - GROWTH_MARGIN)
    if horizon is None:
        # cap the auto horizon: near-marginal generators would otherwise ask
        # expm for steps far beyond representable dynamic range
        horizon = min(10.0 / eps, 1e6 / max(1.0, float(np.linalg.norm(A, 2))))
    ts, mats = expm_grid(A, horizon, steps)
    norms = np.array([np.linalg.norm(m, 2) for m in mats])
    M = float(np.max(norms * np.exp(eps * ts)))
    if not math.isfinite(M):
        raise NumericalError(
            f"growth fit overflowed on horizon {horizon:.3e} (eps {eps:.3e})"
        )
    M = max(M, 1.0)
    # the bound holds on the grid by construction; keep the guard anyway
    if np.any(norms > M * np.exp(-eps * ts) * (1.0 + 1e-9)):
        raise NumericalError("growth bound violated on its own grid")
    return GrowthBound(M=M, eps=eps)


# ---------------------------------------------------------------------------
# Induced and nuclear norms
# ---------------------------------------------------------------------------

def _dual_exponent(p):
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def induced_norm(M, p_from, p_to):
    """Operator norm of M : (R^cols, l_{p_from}) -> (R^rows, l_{p_to}).

    Exact closed forms: (1,1) max column sum, (2,2) largest singular value,
    (inf,inf) max row sum, p_from = 1 (max column l_{p_to} norm), and
    p_to = inf (max row l_{dual(p_from)} norm).  Any other pair returns a
    certified NormInterval: the lower bound from candidate unit vectors,
    the upper bound from norm interpolation; never a point estimate.
    """
    M = as_matrix(M, "M")
    pf, pt = _pvalue(p_from), _pvalue(p_to)
    if isinstance(p_from, SpaceNorm) and p_from.dim != M.shape[1]:
        raise DimensionError("p_from dimension does not match columns")
    if isinstance(p_to, SpaceNorm) and p_to.dim != M.shape[0]:
        raise DimensionError("p_to dimension does not match rows")

    if pf == 1.0:
        # extreme points of the l1 ball are +-e_j
        return float(max(vector_norm(M[:, j], pt) for j in range(M.shape[1])))
    if math.isinf(pt):
        qf = _dual_exponent(pf)
        return float(max(vector_norm(M[i, :], qf) for i in range(M.shape[0])))
    if pf == 2.0 and pt == 2.0:
        return float(np.linalg.norm(M, 2))
    return _induced_norm_interval(M, pf, pt)


def _induced_norm_upper(M, pf, pt):
    """Valid upper bounds for ||M||_{pf -> pt}; the smallest wins."""
    n_cols, n_rows = M.shape[1], M.shape[0]
    sigma = float(np.linalg.norm(M, 2))
    # route through l2: ||x||_2 <= n^{max(0,1/2-1/pf)} ||x||_pf, and back
    c_in = n_cols ** max(0.0, 0.5 - (0.0 if math.isinf(pf) else 1.0 / pf))
    c_out = n_rows ** max(0.0, (0.0 if math.isinf(pt) else 1.0 / pt) - 0.5)
    bounds = [c_in * c_out * sigma]
    if pf == pt:
        # Riesz-Thorin between the exact (1,1) and (inf,inf) endpoints
        n1 = float(np.abs(M).sum(axis=0).max())
        ninf = float(np.abs(M).sum(axis=1).max())
        theta = 0.0 if math.isinf(pf) else 1.0 / pf
        bounds.append(n1**theta * ninf ** (1.0 - theta))
    return min(bounds)


def _induced_norm_interval(M, pf, pt, n_samples=64, seed=0):
    upper = _induced_norm_upper(M, pf, pt)
    rng = np.random.default_rng(seed)
    n = M.shape[1]
    candidates = [np.eye(n)[:, j] for j in range(n)]
    # singular vector of the l2 problem, often near-optimal for nearby p
    _, _, vt = np.linalg.svd(M)
    candidates.append(vt[0])
    candidates.extend(rng.standard_normal((n_samples, n)))
    candidates.append(np.ones(n))
    lower = 0.0
    for x in candidates:
        nx = vector_norm(x, pf)
        if nx > 0:
            lower = max(lower, vector_norm(M @ x, pt) / nx)
    lower = min(lower, upper)
    return NormInterval(lower=lower, upper=upper)


def nuclear_norm(M):
    """Sum of singular values (trace norm)."""
    M = as_matrix(M, "M")
    try:
        return float(np.linalg.svd(M, compute_uv=False).sum())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed on shape {M.shape}: {exc}") from exc


# ---------------------------------------------------------------------------
# Orthonormal coordinates on Sym(n)
# ---------------------------------------------------------------------------

def sym_dim(n):
    """Dimension of Sym(n)."""
    return n * (n + 1) // 2


def sym_basis(n):
    """Orthonormal basis of Sym(n) inside R^{n^2} (column-major vec).

    Columns of the returned (n^2, n(n+1)/2) matrix are vec(E) for
    E = e_i e_i' (diagonal) and (e_i e_j' + e_j e_i') / sqrt(2) (i < j),
    orthonormal under the Frobenius inner product.
    """
    d = sym_dim(n)
    B = np.zeros((n * n, d))
    col = 0
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1.0
        B[:, col] = E.ravel(order="F")
        col += 1
    s = 1.0 / math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = s
            E[j, i] = s
            B[:, col] = E.ravel(order="F")
            col += 1
    return B


def sym_to_vec(P):
    """Coordinates of a symmetric matrix in the orthonormal Sym(n) basis."""
    P = check_symmetric(P, "P")
    n = P.shape[0]
    return sym_basis(n).T @ P.ravel(order="F")


def vec_to_sym(v, n):
    """Inverse of sym_to_vec."""
    v = as_vector(v, sym_dim(n), "coordinates")
    flat = sym_basis(n) @ v
    return flat.reshape((n, n), order="F")
