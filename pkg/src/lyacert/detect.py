"""Detectability and observability machinery for observed pairs (C, A).

Hautus, exponential and L2 detectability coincide at finite dimension and
are cross-checked against each other; disagreement raises, never passes
silently.  The L2 decision rests on one reduction: the implication
"int ||C T(t)x||^2 < inf  =>  int ||T(t)x||^2 < inf" holds for all x iff
the restriction of A to the unobservable subspace is stable (for x with an
unstable observable component the premise already fails).  That reduction
is guarded by quadrature cross-checks wherever randomness enters.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionError,
    InternalInconsistencyError,
    MarginalSpectrumError,
    NoInjectionExistsError,
    NotObserverError,
    NotStableError,
)
from .linalg import (
    as_matrix,
    as_square,
    as_vector,
    eigenvalues,
    expm,
    gramian_integral,
    spectral_abscissa,
)
from .lyapunov import lyap_solve_direct, rkhs_factor

__all__ = [
    "ObservedPair",
    "DetectabilityReport",
    "PiDetectorResult",
    "ObserverAuditReport",
    "hautus_detectable",
    "unobservable_subspace",
    "l2_detectable",
    "stabilizing_output_injection",
    "is_exponentially_detectable",
    "observability_gramian",
    "final_observability_constant",
    "pi_detector_check",
    "observer_implies_detector_audit",
    "detectability_report",
    "duhamel_residual",
    "integral_is_finite",
    "gramian_value_sequence",
    "classify_integral_values",
]

#: eigenvalues with Re >= -HAUTUS_TOL count as unstable (conservative)
HAUTUS_TOL = 1e-9


@dataclass(frozen=True)
class ObservedPair:
    """State generator A with output map C into an m-dimensional space."""

    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_square(self.A, "A")
        C = as_matrix(self.C, "C")
        if C.shape[1] != A.shape[0]:
            raise DimensionError(
                f"C must have {A.shape[0]} columns, got {C.shape[1]}"
            )
        if C.shape[0] < 1:
            raise DimensionError("output dimension must be >= 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def Q(self):
        """Q = C'C, PSD by construction."""
        return self.C.T @ self.C


def hautus_detectable(pair, tol=HAUTUS_TOL):
    """Rank test: for every eigenvalue with Re >= -tol, the stacked matrix
    [A - lambda I; C] must have full column rank (sigma_min >= tol ||A||)."""
    A, C = pair.A, pair.C
    n = pair.n
    scale = max(float(np.linalg.norm(A, 2)), 1.0)
    for lam in eigenvalues(A):
        if lam.real < -tol:
            continue
        stacked = np.vstack([A - lam * np.eye(n), C.astype(complex)])
        smin = float(np.linalg.svd(stacked, compute_uv=False)[-1])
        if smin < tol * scale:
            return False
    return True


def unobservable_subspace(pair, rank_tol=None):
    """Orthonormal basis of ker [C; CA; ...; CA^{n-1}] (empty when observable).

    The subspace is A-invariant; that is verified, not assumed.
    """
    A, C = pair.A, pair.C
    n, m = pair.n, pair.m
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    O = np.vstack(blocks)
    _, sig, Vt = np.linalg.svd(O)
    if rank_tol is None:
        rank_tol = max(O.shape) * np.finfo(float).eps
    smax = sig[0] if sig.size else 0.0
    if smax == 0.0:
        basis = np.eye(n)
    else:
        rank = int(np.sum(sig > rank_tol * smax))
        basis = Vt[rank:].T
    if basis.shape[1]:
        resid = np.linalg.norm(A @ basis - basis @ (basis.T @ A @ basis))
        if resid > 1e-8 * max(float(np.linalg.norm(A)), 1.0):
            raise InternalInconsistencyError(
                "unobservable subspace is not A-invariant",
                diagnostics={"residual": resid},
            )
    return basis


def l2_detectable(pair, tol=HAUTUS_TOL):
    """Does int ||C T x||^2 < inf force int ||T x||^2 < inf for every x?

    Decided exactly: true iff A restricted to the unobservable subspace has
    spectral abscissa < -tol.  For x with an unstable or neutral observable
    component the premise fails, so the implication is vacuous there.
    """
    basis = unobservable_subspace(pair)
    if basis.shape[1] == 0:
        return True
    restricted = basis.T @ pair.A @ basis
    return spectral_abscissa(restricted) < -tol


def stabilizing_output_injection(pair):
    """F with A - FC exponentially stable, via the dual Riccati equation
    A S + S A' - S C'C S + I = 0 solved on the Hamiltonian pencil;
    F = S C'.  The postcondition spectral_abscissa(A - FC) < 0 is verified."""
    A, C = pair.A, pair.C
    n, m = pair.n, pair.m
    if not hautus_detectable(pair):
        raise NoInjectionExistsError("pair is not detectable")
    if float(np.linalg.norm(C)) == 0.0:
        # detectable with zero output means A is already stable
        F = np.zeros((n, m))
    else:
        try:
            sigma = scipy.linalg.solve_continuous_are(
                A.T, C.T, np.eye(n), np.eye(m)
            )
        except np.linalg.LinAlgError as exc:
            raise MarginalSpectrumError(
                f"Riccati Hamiltonian has imaginary-axis eigenvalues: {exc}"
            ) from exc
        F = sigma @ C.T
    alpha = spectral_abscissa(A - F @ C)
    if alpha >= 0.0:
        raise InternalInconsistencyError(
            "output injection failed to stabilize",
            diagnostics={"abscissa": alpha},
        )
    return F


def is_exponentially_detectable(pair):
    """(True, F) when a stabilizing injection exists, else (False, None).

    Cross-checks the implication exponential => L2: a witness F with a
    failing L2 verdict is reported as an internal inconsistency."""
    try:
        F = stabilizing_output_injection(pair)
    except (NoInjectionExistsError, MarginalSpectrumError):
        return False, None
    if not l2_detectable(pair):
        raise InternalInconsistencyError(
            "exponentially detectable pair failed the L2 decision"
        )
    return True, F


def observability_gramian(pair, t0):
    """W(t0) = int_0^{t0} e^{tA'} C'C e^{tA} dt (block-exponential, exact).

    x' W x is the output energy int_0^{t0} ||C T(t) x||^2 dt."""
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    return gramian_integral(pair.A, pair.Q, t0)


def final_observability_constant(pair, t0):
    """Best eps with int_0^{t0} ||C T x||^2 >= eps ||T(t0) x||^2 for all x.

    The smallest eigenvalue of the pencil (W(t0), G(t0)) with
    G = e^{t0 A'} e^{t0 A}; G is positive definite, so the pencil is
    well posed.  The pair is continuously finally observable iff the
    returned value is positive."""
    W = observability_gramian(pair, t0)
    E = expm(pair.A, t0)
    G = E.T @ E
    vals = scipy.linalg.eigh(W, 0.5 * (G + G.T), eigvals_only=True)
    return float(vals[0])


# ---------------------------------------------------------------------------
# Quadrature classification (cross-check machinery)
# ---------------------------------------------------------------------------

def gramian_value_sequence(A, Q, xs, max_horizon=256.0):
    """x' W(t) x for each x in xs at t = 1, 2, 4, ..., max_horizon.

    The Gramians are accumulated by the doubling identity
    W(2t) = W(t) + e^{tA}' W(t) e^{tA}, which adds PSD terms only and so
    stays accurate at horizons where the one-shot block exponential loses
    precision.  Divergent sequences saturate to non-finite values and are
    truncated."""
    xs = [np.asarray(x, dtype=float) for x in xs]
    out = [[] for _ in xs]
    with np.errstate(over="ignore", invalid="ignore"):
        W = gramian_integral(A, Q, 1.0)
        E = expm(A, 1.0)
        t = 1.0
        while t <= max_horizon:
            for i, x in enumerate(xs):
                out[i].append(float(x @ W @ x))
            if not np.all(np.isfinite(W)) or not np.all(np.isfinite(E)):
                break
            W = W + E.T @ W @ E
            E = E @ E
            t *= 2.0
    return out


def classify_integral_values(vals):
    """Finite-vs-divergent verdict for one horizon-doubled value sequence.

    False on any non-finite value or a 1e14-fold blowup over the first
    value; True when the LAST doubling changed the value by under 1%
    (judged at the end of the sequence: a weakly excited unstable mode can
    sit below the stable-mode energy for many doublings, so an early
    near-flat step proves nothing); None when the horizon ran out without
    either."""
    first = None
    for val in vals:
        if not np.isfinite(val):
            return False
        first = first if first is not None else max(val, 1e-300)
        if val > 1e14 * max(first, 1.0):
            return False
    if len(vals) >= 2 and vals[-1] <= vals[-2] * 1.01 + 1e-12 * max(first, 1.0):
        return True
    return None


def integral_is_finite(A, Q, x, max_horizon=256.0):
    """Classify int_0^inf x' e^{tA'} Q e^{tA} x dt by horizon doubling."""
    vals = gramian_value_sequence(A, Q, [x], max_horizon=max_horizon)[0]
    return classify_integral_values(vals)


class PiDetectorResult(NamedTuple):
    is_detector: bool
    witness: Optional[np.ndarray]  # state x breaking the implication


def pi_detector_check(target, samples=8, seed=0):
    """Is Q a pi-detector: int <Q T x, T x> < inf => int ||T x||^2 < inf?

    Accepts an ObservedPair or a tuple (A, Q) with PSD Q (factored through
    its reproducing-kernel coordinates, Q = C'C).  The decision is the
    exact L2 reduction; sampled states are additionally cross-checked by
    horizon-doubling quadrature.  With Q = I the premise equals the
    conclusion and every generator passes."""
    if isinstance(target, ObservedPair):
        pair = target
    else:
        A, Q = target
        A = as_square(A, "A")
        C = rkhs_factor(Q)
        if C.shape[0] == 0:
            C = np.zeros((1, A.shape[0]))
        pair = ObservedPair(A=A, C=C)
    decision = l2_detectable(pair)
    witness = None
    if not decision:
        basis = unobservable_subspace(pair)
        restricted = basis.T @ pair.A @ basis
        w, V = np.linalg.eig(restricted)
        k = int(np.argmax(w.real))
        v = (basis @ V[:, k]).real
        if np.linalg.norm(v) < 1e-12:
            v = (basis @ V[:, k]).imag
        witness = v / np.linalg.norm(v)

    rng = np.random.default_rng(seed)
    A, Q = pair.A, pair.Q
    eye = np.eye(pair.n)
    checks = [rng.standard_normal(pair.n) for _ in range(samples)]
    if witness is not None:
        checks.append(witness)
    for x in checks:
        premise = integral_is_finite(A, Q, x)
        conclusion = integral_is_finite(A, eye, x)
        if premise is True and conclusion is False and decision:
            raise InternalInconsistencyError(
                "quadrature found a counterexample to a positive pi-detector "
                "verdict",
                diagnostics={"x": x},
            )
    return PiDetectorResult(is_detector=decision, witness=witness)


# ---------------------------------------------------------------------------
# Observer => detector audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObserverAuditReport:
    t0: float
    eps_star: float
    samples: int
    max_violation: float


def observer_implies_detector_audit(pair, t0, samples=16, seed=0, tol=1e-10):
    """Verify the chain inequality behind "final observer => L1 detector".

    Integrating the observability estimate over shifted windows bounds the
    tail energy by the observed energy:

        int_0^inf ||T x||^2 <= int_0^{t0} ||T x||^2
                               + (t0/eps*) int_0^inf ||C T x||^2,

    with eps* the final-observability constant.  All three integrals are
    exact Gramians (the infinite ones via the Lyapunov solver); reported is
    the maximal relative slack violation, which must be <= 1e-6."""
    alpha = spectral_abscissa(pair.A)
    if alpha >= 0.0:
        raise NotStableError(
            f"audit requires a stable generator (abscissa {alpha:.3e})"
        )
    eps_star = final_observability_constant(pair, t0)
    if eps_star <= tol:
        raise NotObserverError(
            f"pair is not finally observable at t0={t0}: eps* = {eps_star:.3e}"
        )
    A = pair.A
    P_inf = lyap_solve_direct(A, np.eye(pair.n))
    W_t0 = gramian_integral(A, np.eye(pair.n), t0)
    P_out = lyap_solve_direct(A, pair.Q)
    rng = np.random.default_rng(seed)
    xs = [rng.standard_normal(pair.n) for _ in range(samples)]
    xs.extend(np.eye(pair.n))
    max_violation = 0.0
    for x in xs:
        lhs = float(x @ P_inf @ x)
        rhs = float(x @ W_t0 @ x) + (t0 / eps_star) * float(x @ P_out @ x)
        violation = (lhs - rhs) / max(lhs, 1e-300)
        max_violation = max(max_violation, violation)
    return ObserverAuditReport(
        t0=t0, eps_star=eps_star, samples=len(xs), max_violation=max_violation
    )


def duhamel_residual(pair, F, t, x):
    """Relative residual of the variation-of-parameters identity

        T(t)x = T_{A-FC}(t)x + int_0^t T_{A-FC}(t-s) FC T(s)x ds,

    with the convolution integral computed exactly as the off-diagonal
    block of exp(t [[A-FC, FC], [0, A]])."""
    A, C = pair.A, pair.C
    n = pair.n
    F = as_matrix(F, "F")
    x = as_vector(x, n, "x")
    Acl = A - F @ C
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = Acl
    M[:n, n:] = F @ C
    M[n:, n:] = A
    E = scipy.linalg.expm(t * M)
    lhs = expm(A, t) @ x
    rhs = expm(Acl, t) @ x + E[:n, n:] @ x
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1.0)
    return float(np.linalg.norm(lhs - rhs) / scale)


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectabilityReport:
    """Detectability verdicts for one pair; hautus = exponential = l2 at
    finite dimension, enforced at construction."""

    hautus: bool
    exponential: bool
    F: Optional[np.ndarray]
    l2: bool
    unobservable_basis: np.ndarray
    abscissa_on_unobservable: Optional[float]
    eps_star: Optional[dict] = None

    def __post_init__(self):
        if not (self.hautus == self.exponential == self.l2):
            raise InternalInconsistencyError(
                "detectability notions disagree",
                diagnostics={
                    "hautus": self.hautus,
                    "exponential": self.exponential,
                    "l2": self.l2,
                },
            )

    def to_dict(self):
        return {
            "hautus": self.hautus,
            "exponential": self.exponential,
            "F": None if self.F is None else self.F.tolist(),
            "l2": self.l2,
            "eps_star": self.eps_star,
        }


def detectability_report(pair, t0=None):
    """Run all detectability tests on a pair, cross-checking the verdicts;
    eps_star is included when an observation horizon t0 is given."""
    hautus = hautus_detectable(pair)
    exponential, F = is_exponentially_detectable(pair)
    l2 = l2_detectable(pair)
    basis = unobservable_subspace(pair)
    absc = None
    if basis.shape[1]:
        absc = spectral_abscissa(basis.T @ pair.A @ basis)
    eps = None
    if t0 is not None:
        eps = {"t0": float(t0), "value": final_observability_constant(pair, t0)}
    return DetectabilityReport(
        hautus=hautus,
        exponential=exponential,
        F=F,
        l2=l2,
        unobservable_basis=basis,
        abscissa_on_unobservable=absc,
        eps_star=eps,
    )
