"""Lyapunov generator, implemented/tensor semigroups, projective duality.

The Lyapunov generator L_A : P -> A'P + PA acts on Sym(n); its semigroup
T(t)P = e^{tA'} P e^{tA} is the adjoint of the tensor semigroup
rho -> (e^{tA} x) tensor (e^{tA} y) on R^n tensor R^n under the trace
pairing <<P, x tensor y>> = <Px, y>.  This module realizes both, the
projective tensor norms, the symmetric calculus, the RKHS factorization
Q = C'C, and two independent Lyapunov solvers (Kronecker-lift direct solve
and exact block-exponential integral accumulation).
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    DimensionError,
    DivergenceError,
    InternalInconsistencyError,
    NotPsdError,
    ResonantSpectrumError,
)
from .linalg import (
    NormInterval,
    as_matrix,
    as_square,
    as_vector,
    check_symmetric,
    eigenvalues,
    expm,
    gramian_integral,
    induced_norm,
    nuclear_norm,
    spectral_abscissa,
    sym_basis,
    sym_to_vec,
    vec_to_sym,
    vector_norm,
)

__all__ = [
    "Tensor2",
    "LyapunovOperator",
    "SymOperator",
    "monomial",
    "lyap_apply",
    "implemented_apply",
    "tensor_semigroup_apply",
    "pairing",
    "projective_norm",
    "symmetric_project",
    "grothendieck_decompose",
    "positive_negative_split",
    "rkhs_factor",
    "lyap_solve_direct",
    "lyap_solve_integral",
    "s_infinity_operator",
]

#: |lambda_i + lambda_j| below this is a resonant (singular) Lyapunov operator
RESONANCE_TOL = 1e-10


# ---------------------------------------------------------------------------
# Tensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tensor2:
    """Element of R^n tensor R^n as an n x n coefficient grid.

    coeffs[i, j] is the coefficient of e_i tensor e_j; p is the l_p
    exponent of the factor space (default Euclidean).
    """

    coeffs: np.ndarray
    symmetric: bool = False
    p: float = 2.0

    def __post_init__(self):
        R = as_square(self.coeffs, "coeffs")
        object.__setattr__(self, "coeffs", R)
        if self.symmetric:
            scale = max(float(np.linalg.norm(R)), 1.0)
            if float(np.abs(R - R.T).max()) > 1e-12 * scale:
                raise ValueError("symmetric flag set on an asymmetric grid")
        if not (self.p >= 1.0):
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")

    @property
    def dim(self):
        return self.coeffs.shape[0]

    def to_dict(self):
        return {
            "coeffs": self.coeffs.tolist(),
            "symmetric": self.symmetric,
            "p": self.p,
        }

    @staticmethod
    def from_dict(d):
        return Tensor2(
            coeffs=np.asarray(d["coeffs"], dtype=float),
            symmetric=bool(d.get("symmetric", False)),
            p=float(d.get("p", 2.0)),
        )


def monomial(x, y, p=2.0):
    """The rank-one tensor x tensor y."""
    x = as_vector(x, name="x")
    y = as_vector(y, len(x), name="y")
    return Tensor2(coeffs=np.outer(x, y), symmetric=bool(np.array_equal(x, y)), p=p)


def pairing(P, rho):
    """<<P, rho>> = sum_ij coeffs[i,j] (P e_i)_j = trace(P @ coeffs).

    On monomials this is <Px, y>."""
    P = as_square(P, "P")
    if P.shape[0] != rho.dim:
        raise DimensionError(f"P is {P.shape}, tensor dimension {rho.dim}")
    return float(np.trace(P @ rho.coeffs))


def symmetric_project(rho):
    """Project onto the symmetric tensors: coeffs <- (coeffs + coeffs')/2."""
    R = 0.5 * (rho.coeffs + rho.coeffs.T)
    return Tensor2(coeffs=R, symmetric=True, p=rho.p)


def grothendieck_decompose(rho):
    """Symmetric tensors decompose as sum_i a_i u_i tensor u_i.

    Returns eigenpairs (a_i, u_i) of the coefficient grid, descending in
    a_i, with a deterministic sign convention.  The positive/negative
    split rho = rho+ - rho- follows by grouping signs.
    """
    if not rho.symmetric:
        raise ValueError("grothendieck_decompose requires the symmetric flag")
    R = check_symmetric(rho.coeffs, "coeffs")
    lam, U = np.linalg.eigh(R)
    order = np.argsort(lam)[::-1]
    out = []
    for k in order:
        u = U[:, k].copy()
        nz = np.flatnonzero(np.abs(u) > 1e-12 * np.abs(u).max())
        if nz.size and u[nz[0]] < 0:
            u = -u
        out.append((float(lam[k]), u))
    return out


def positive_negative_split(rho):
    """rho = rho+ - rho- with both parts PSD coefficient grids."""
    terms = grothendieck_decompose(rho)
    n = rho.dim
    plus = np.zeros((n, n))
    minus = np.zeros((n, n))
    for a, u in terms:
        if a >= 0:
            plus += a * np.outer(u, u)
        else:
            minus += -a * np.outer(u, u)
    return (
        Tensor2(coeffs=0.5 * (plus + plus.T), symmetric=True, p=rho.p),
        Tensor2(coeffs=0.5 * (minus + minus.T), symmetric=True, p=rho.p),
    )


# ---------------------------------------------------------------------------
# Implemented and tensor semigroups
# ---------------------------------------------------------------------------

def lyap_apply(A, P):
    """Lyapunov generator action A'P + PA (transpose realizes the adjoint)."""
    A = as_square(A, "A")
    P = check_symmetric(P, "P")
    if P.shape != A.shape:
        raise DimensionError(f"P must match A, got {P.shape} vs {A.shape}")
    out = A.T @ P + P @ A
    return 0.5 * (out + out.T)


def implemented_apply(A, V, t, P):
    """Implemented semigroup e^{tV'} P e^{tA}.

    With V = A and symmetric P this is the Lyapunov semigroup
    T(t)P = e^{tA'} P e^{tA}, a positive map on Sym(n)."""
    A = as_square(A, "A")
    V = as_square(V, "V")
    P = as_matrix(P, "P")
    if V.shape[0] != P.shape[0] or P.shape[1] != A.shape[0]:
        raise DimensionError(
            f"shape mismatch: V {V.shape}, P {P.shape}, A {A.shape}"
        )
    return expm(V, t).T @ P @ expm(A, t)


def tensor_semigroup_apply(A, V, t, rho):
    """Tensor semigroup on coefficient grids: R -> e^{tA} R e^{tV'}.

    Monomials map as x tensor y -> (e^{tA} x) tensor (e^{tV} y); this is
    the pre-adjoint of implemented_apply under the trace pairing."""
    A = as_square(A, "A")
    V = as_square(V, "V")
    if A.shape[0] != rho.dim or V.shape[0] != rho.dim:
        raise DimensionError("generator dimensions do not match the tensor")
    R = expm(A, t) @ rho.coeffs @ expm(V, t).T
    same_gen = A is V or np.array_equal(A, V)
    symmetric = bool(rho.symmetric and same_gen)
    if symmetric:
        R = 0.5 * (R + R.T)
    return Tensor2(coeffs=R, symmetric=symmetric, p=rho.p)


class LyapunovOperator:
    """The generator P -> A'P + PA, materialized on Sym(n) coordinates.

    The coordinate matrix is the Kronecker lift I (x) A' + A' (x) I
    restricted to the orthonormal symmetric basis.
    """

    def __init__(self, A):
        self.A = as_square(A, "A")

    @property
    def n(self):
        return self.A.shape[0]

    @cached_property
    def matrix(self):
        n = self.n
        A = self.A
        K = np.kron(np.eye(n), A.T) + np.kron(A.T, np.eye(n))
        B = sym_basis(n)
        return B.T @ K @ B

    def apply(self, P):
        return lyap_apply(self.A, P)


# ---------------------------------------------------------------------------
# Projective tensor norm
# ---------------------------------------------------------------------------

def projective_norm(rho):
    """pi(rho) = inf sum ||x_i||_p ||y_i||_p over decompositions.

    Exact for p = 2 (nuclear norm of the grid) and p = 1 (entrywise
    absolute sum); any other exponent returns a certified NormInterval
    (upper bound from explicit decompositions, lower bound from the
    duality with operators of induced p -> q norm at most one).
    """
    R = rho.coeffs
    p = float(rho.p)
    if p == 2.0:
        return nuclear_norm(R)
    if p == 1.0:
        return float(np.abs(R).sum())
    return _projective_interval(R, p)


def _duality_vec(x, p):
    """j(x) with <j(x), x> = ||x||_p and ||j(x)||_q = 1."""
    x = np.asarray(x, dtype=float)
    nx = vector_norm(x, p)
    if nx == 0.0:
        return np.zeros_like(x)
    if math.isinf(p):
        j = np.zeros_like(x)
        i = int(np.argmax(np.abs(x)))
        j[i] = np.sign(x[i])
        return j
    return np.sign(x) * np.abs(x / nx) ** (p - 1.0)


def _projective_interval(R, p, n_samples=32, seed=0):
    n, m = R.shape
    q = math.inf if p == 1.0 else (1.0 if math.isinf(p) else p / (p - 1.0))

    # upper bounds: any explicit decomposition sum ||x_k|| ||y_k||
    U, sig, Vt = np.linalg.svd(R)
    uppers = [
        sum(
            s * vector_norm(U[:, k], p) * vector_norm(Vt[k, :], p)
            for k, s in enumerate(sig)
        ),
        float(np.abs(R).sum()),  # entrywise e_i tensor e_j pieces
        sum(vector_norm(R[i, :], p) for i in range(n)),  # row peeling
        sum(vector_norm(R[:, j], p) for j in range(m)),  # column peeling
    ]
    upper = min(uppers)

    # lower bounds: trace(P R) for P with a certified ||P||_{p->q} <= 1
    def norm_ub(P):
        nrm = induced_norm(P, p, q)
        return nrm.upper if isinstance(nrm, NormInterval) else nrm

    lower = float(np.abs(R).max())  # E_ij candidates have norm exactly 1
    # norm comparison: ||x||_p >= c ||x||_2 termwise bounds any l_p
    # decomposition cost below by c_x c_y times the exact l_2 (nuclear) norm
    c_x = 1.0 if p <= 2.0 else n ** (1.0 / p - 0.5)
    c_y = 1.0 if p <= 2.0 else m ** (1.0 / p - 0.5)
    lower = max(lower, c_x * c_y * float(sig.sum()))
    for k in range(len(sig)):
        if sig[k] <= 0:
            continue
        P = np.outer(_duality_vec(Vt[k, :], p), _duality_vec(U[:, k], p))
        lower = max(lower, float(np.trace(P @ R)))  # ||P||_{p->q} <= 1 exactly
    rng = np.random.default_rng(seed)
    candidates = [np.sign(R.T)] + [
        rng.standard_normal((m, n)) for _ in range(n_samples)
    ]
    for P in candidates:
        ub = norm_ub(P)
        if ub > 0:
            lower = max(lower, float(np.trace(P @ R)) / ub)
    lower = min(lower, upper)
    return NormInterval(lower=lower, upper=upper)


# ---------------------------------------------------------------------------
# RKHS factorization and Lyapunov solvers
# ---------------------------------------------------------------------------

def rkhs_factor(Q, rank_tol=1e-12, psd_tol=1e-9):
    """Spectral factor C with C'C = Q for PSD Q.

    Rows of C span the reproducing-kernel coordinates of Q; eigenpairs
    with lambda < rank_tol * lambda_max are truncated, so C has
    numerical-rank-many rows and ||C'C - Q|| <= n * rank_tol * lambda_max.
    """
    Q = check_symmetric(Q, "Q")
    lam, U = np.linalg.eigh(Q)
    lam_max = float(lam[-1])
    if lam[0] < -psd_tol * max(lam_max, -float(lam[0]), 1e-300):
        raise NotPsdError(
            f"Q is not PSD: lambda_min = {lam[0]:.3e}"
        )
    if lam_max <= 0.0:
        return np.zeros((0, Q.shape[0]))
    keep = np.flatnonzero(lam >= rank_tol * lam_max)[::-1]  # descending
    return (np.sqrt(lam[keep])[:, None]) * U[:, keep].T


def _check_nonresonant(A):
    """Eigenvalues of A, raising if some lambda_i + lambda_j vanishes."""
    w = eigenvalues(A)
    n = len(w)
    for i in range(n):
        for j in range(i, n):
            if abs(w[i] + w[j]) < RESONANCE_TOL:
                raise ResonantSpectrumError(
                    f"resonant spectrum: lambda_{i} + lambda_{j} = "
                    f"{w[i] + w[j]:.3e}",
                    pair=(complex(w[i]), complex(w[j])),
                )
    return w


def lyap_solve_direct(A, Q, residual_rtol=1e-8):
    """Solve A'P + PA = -Q on symmetric coordinates via the Kronecker lift.

    Raises ResonantSpectrumError when some eigenvalue pair of A sums to
    zero (the lifted system is singular), carrying the offending pair.
    """
    A = as_square(A, "A")
    Q = check_symmetric(Q, "Q")
    if Q.shape != A.shape:
        raise DimensionError(f"Q must match A, got {Q.shape} vs {A.shape}")
    _check_nonresonant(A)
    op = LyapunovOperator(A)
    p = np.linalg.solve(op.matrix, -sym_to_vec(Q))
    P = vec_to_sym(p, A.shape[0])
    residual = np.linalg.norm(A.T @ P + P @ A + Q)
    scale = np.linalg.norm(Q)
    if residual > residual_rtol * max(scale, 1e-300) and scale > 0:
        raise InternalInconsistencyError(
            "Lyapunov solve residual too large",
            diagnostics={"residual": residual, "scale": scale},
        )
    return P


def lyap_solve_integral(
    A, Q, step=None, increment_rtol=1e-12, psd_tol=1e-9, max_steps=200_000
):
    """P = int_0^inf e^{tA'} Q e^{tA} dt by exact per-interval accumulation.

    Each increment over [k d, (k+1) d] is E' W E with W the block-exponential
    Gramian of one step and E = e^{k d A}; partial sums are monotone
    nondecreasing in the PSD order (checked).  Stops when an increment
    falls below increment_rtol relative to the accumulated solution.

    Raises DivergenceError when increments grow over three consecutive
    intervals with a confirming nonnegative spectral abscissa.
    """
    A = as_square(A, "A")
    Q = check_symmetric(Q, "Q")
    lam_min_q = float(np.linalg.eigvalsh(Q)[0])
    if lam_min_q < -psd_tol * max(float(np.linalg.norm(Q, 2)), 1e-300):
        raise NotPsdError(f"Q is not PSD: lambda_min = {lam_min_q:.3e}")
    alpha = spectral_abscissa(A)
    if step is None:
        step = 0.5 / (1.0 + abs(alpha))
    n = A.shape[0]
    W = gramian_integral(A, Q, step)
    F = expm(A, step)
    P = np.zeros((n, n))
    E = np.eye(n)
    prev = None
    streak = 0
    for k in range(max_steps):
        inc = E.T @ W @ E
        inc = 0.5 * (inc + inc.T)
        lam_min_inc = float(np.linalg.eigvalsh(inc)[0])
        if lam_min_inc < -1e-12 * max(float(np.linalg.norm(P)), 1.0):
            raise InternalInconsistencyError(
                "integral increment not PSD: partial sums must be monotone",
                diagnostics={"step": k, "lambda_min": lam_min_inc},
            )
        P += inc
        E = E @ F
        inc_norm = float(np.linalg.norm(inc))
        if prev is not None:
            streak = streak + 1 if inc_norm >= prev * (1.0 - 1e-9) else 0
        if streak >= 3 and alpha >= 0.0:
            raise DivergenceError(
                f"integral diverges: increments grew over {streak} consecutive "
                f"intervals (spectral abscissa {alpha:.3e})"
            )
        prev = inc_norm
        if k >= 1 and inc_norm <= increment_rtol * max(float(np.linalg.norm(P)), 1e-300):
            return 0.5 * (P + P.T)
    raise DivergenceError(
        f"integral did not converge within {max_steps} intervals"
    )


@dataclass(frozen=True)
class SymOperator:
    """A linear map on Sym(n), stored on orthonormal coordinates."""

    n: int
    matrix: np.ndarray

    def apply(self, P):
        P = check_symmetric(P, "P")
        if P.shape[0] != self.n:
            raise DimensionError(f"expected {self.n} x {self.n}, got {P.shape}")
        return vec_to_sym(self.matrix @ sym_to_vec(P), self.n)


def s_infinity_operator(A, verify=True):
    """Materialize -L_A^{-1} on Sym(n) coordinates.

    For stable A this is the map Q -> int_0^inf e^{tA'} Q e^{tA} dt; it is
    then verified to send a PSD spanning set to PSD images and to agree
    with the direct solver route.
    """
    A = as_square(A, "A")
    _check_nonresonant(A)
    op = LyapunovOperator(A)
    S = -np.linalg.inv(op.matrix)
    result = SymOperator(n=A.shape[0], matrix=S)
    if verify and spectral_abscissa(A) < 0.0:
        n = A.shape[0]
        eye = np.eye(n)
        spanning = [np.outer(eye[i], eye[i]) for i in range(n)]
        spanning += [
            np.outer(eye[i] + eye[j], eye[i] + eye[j])
            for i in range(n)
            for j in range(i + 1, n)
        ]
        for Qb in spanning:
            P = result.apply(Qb)
            lam_min = float(np.linalg.eigvalsh(P)[0])
            if lam_min < -1e-9 * max(float(np.linalg.norm(P, 2)), 1e-300):
                raise InternalInconsistencyError(
                    "-L_A^{-1} image of a PSD element is not PSD for stable A",
                    diagnostics={"lambda_min": lam_min},
                )
            P_direct = lyap_solve_direct(A, Qb)
            if np.linalg.norm(P - P_direct) > 1e-8 * max(
                np.linalg.norm(P_direct), 1.0
            ):
                raise InternalInconsistencyError(
                    "inverse route disagrees with the direct solver",
                )
    return result
