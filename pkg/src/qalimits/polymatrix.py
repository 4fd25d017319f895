"""Chebyshev polynomials of matrices and Schur-multiplier (gamma_2) estimates.

Covers divided-difference matrices, the Daleckii-Krein derivative of a
matrix function, certified gamma_2 upper/lower estimates, and the smoothed
flip-projector operator ``K = U C_m(Gamma_0) U^dag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.optimize import minimize

__all__ = [
    "ScalarFunction",
    "DividedDifferenceMatrix",
    "Gamma2Estimate",
    "SmoothingOperatorBundle",
    "VerificationError",
    "chebyshev_T",
    "chebyshev_T_recurrence",
    "chebyshev_dT",
    "smoothing_poly",
    "smoothing_degree",
    "divided_difference_matrix",
    "matrix_function",
    "matrix_function_derivative",
    "gamma2_estimate",
    "gamma2_analytic",
    "operator_difference_check",
    "build_smoothing_operator",
]

SANDWICH_SLACK = 1e-9


class VerificationError(RuntimeError):
    pass


# --- Chebyshev polynomials ---------------------------------------------------

def chebyshev_T(n: int, x):
    """``T_n(x)`` from the trigonometric/hyperbolic closed forms."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = np.cos(n * np.arccos(np.clip(x, -1.0, 1.0)))
    outside = np.cosh(n * np.arccosh(np.maximum(ax, 1.0))) * np.where(x < 0, (-1.0) ** n, 1.0)
    out = np.where(ax <= 1.0, inside, outside)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _doubling_plan(n: int) -> tuple:
    if n <= 1:
        return ()
    return _doubling_plan(n // 2) + ((n // 2) + 1,) * (n % 2) + (n // 2,)


def chebyshev_T_recurrence(n: int, x):
    """``T_n(x)`` from ``T_{2k} = 2 T_k^2 - 1`` and ``T_{2k+1} = 2 T_{k+1} T_k - x``."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    memo = {0: np.ones_like(x), 1: x.copy()}

    def get(k):
        if k not in memo:
            h = k // 2
            memo[k] = 2 * get(h) ** 2 - 1 if k % 2 == 0 else 2 * get(h + 1) * get(h) - x
        return memo[k]

    out = get(n)
    return float(out) if out.ndim == 0 else out


def chebyshev_dT(n: int, x):
    """``T_n'(x)`` through Clenshaw evaluation of the differentiated Chebyshev series."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    out = npcheb.chebval(np.asarray(x, dtype=float), npcheb.chebder(coef)) if n else np.zeros_like(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _shift(x, eps):
    return (1.0 + eps - 2.0 * np.asarray(x, dtype=float)) / (1.0 - eps)


def smoothing_poly(m: int, n1: int, x, eps: float | None = None):
    """``C_m(x) = 1 - T_m(f(x)) / T_m(f(0))`` with ``f(x) = (1 + eps - 2x) / (1 - eps)``.

    ``eps`` defaults to ``1 / n1``.
    """
    if n1 < 2:
        raise ValueError("n1 must be >= 2")
    eps = 1.0 / n1 if eps is None else eps
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("C_m is evaluated on [0, 1] only")
    out = 1.0 - chebyshev_T(m, _shift(x, eps)) / chebyshev_T(m, _shift(0.0, eps))
    return float(out) if np.ndim(out) == 0 else out


def smoothing_degree(n1: int, theta: float) -> tuple[int, float]:
    """Integer degree for ``m = n1**(1/2 - theta) / 2``, rounded up and at least 1.

    Rounding up keeps ``m^2 / n1 >= n1**(-2 theta) / 4``, which the lower
    side of the operator sandwich needs. Returns ``(m, unrounded m)``.
    """
    raw = 0.5 * n1 ** (0.5 - theta)
    return max(1, math.ceil(raw - 1e-12)), raw


# --- scalar function descriptors ----------------------------------------------

@dataclass(frozen=True)
class ScalarFunction:
    name: str
    f: Callable
    df: Callable

    def __call__(self, x):
        return self.f(x)

    @classmethod
    def power(cls, k: int) -> "ScalarFunction":
        return cls(f"x^{k}", lambda x: np.asarray(x, dtype=float) ** k,
                   lambda x: k * np.asarray(x, dtype=float) ** (k - 1) if k else np.zeros_like(np.asarray(x, dtype=float)))

    @classmethod
    def constant(cls, c: float) -> "ScalarFunction":
        return cls(f"const({c})", lambda x: np.full_like(np.asarray(x, dtype=float), c),
                   lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @classmethod
    def chebyshev(cls, n: int) -> "ScalarFunction":
        return cls(f"T_{n}", lambda x: chebyshev_T(n, x), lambda x: chebyshev_dT(n, x))

    @classmethod
    def smoothing(cls, m: int, eps: float) -> "ScalarFunction":
        """``C_m`` with shift ``eps``, extended as a polynomial to the whole real line."""
        tm0 = chebyshev_T(m, _shift(0.0, eps))
        return cls(f"C_{m}[eps={eps:g}]",
                   lambda x: 1.0 - chebyshev_T(m, _shift(x, eps)) / tm0,
                   lambda x: 2.0 / (1.0 - eps) * chebyshev_dT(m, _shift(x, eps)) / tm0)


@dataclass
class DividedDifferenceMatrix:
    entries: np.ndarray
    lam: np.ndarray
    f_id: str


def divided_difference_matrix(f: ScalarFunction, lam: Sequence[float],
                              rel_gap: float = 1e-8) -> DividedDifferenceMatrix:
    """First divided differences of ``f`` on ``lam``; the diagonal holds ``f'``.

    Pairs closer than ``rel_gap * max(1, max|lam|)`` use the mean of the two
    derivatives instead of the quotient.
    """
    lam = np.asarray(lam, dtype=float)
    fl = np.asarray(f(lam), dtype=float)
    dfl = np.asarray(f.df(lam), dtype=float)
    if not (np.all(np.isfinite(fl)) and np.all(np.isfinite(dfl))):
        raise ValueError(f"{f.name} is not differentiable at every point of lambda")
    gap = lam[:, None] - lam[None, :]
    close = np.abs(gap) < rel_gap * max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = (fl[:, None] - fl[None, :]) / gap
    D = np.where(close, 0.5 * (dfl[:, None] + dfl[None, :]), quot)
    return DividedDifferenceMatrix(D, lam, f.name)


def _check_hermitian(A, name):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or np.max(np.abs(A - A.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(A))):
        raise ValueError(f"{name} must be a Hermitian matrix")
    return A


def matrix_function(A, f: ScalarFunction) -> np.ndarray:
    A = _check_hermitian(A, "A")
    w, V = np.linalg.eigh(A)
    return (V * f(w)) @ V.conj().T


def matrix_function_derivative(A, E, f: ScalarFunction) -> np.ndarray:
    """``d/dt f(A + tE)`` at ``t = 0``: ``V (D_f(lambda) o V^dag E V) V^dag``."""
    A = _check_hermitian(A, "A")
    E = _check_hermitian(E, "E")
    w, V = np.linalg.eigh(A)
    D = divided_difference_matrix(f, w).entries
    return V @ (D * (V.conj().T @ E @ V)) @ V.conj().T


# --- gamma_2 ------------------------------------------------------------------

@dataclass
class Gamma2Estimate:
    upper: float
    lower: float
    analytic: float | None = None
    factors: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    witness: np.ndarray | None = field(default=None, repr=False)
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"upper": self.upper, "lower": self.lower, "analytic": self.analytic,
                "residual": self.residual}


def gamma2_analytic(context) -> float | None:
    """``(2n^2 - 1) T_n(1 + delta)`` for ``(n, delta)``; ``6n^2 - 3`` for ``(n,)``."""
    if context is None:
        return None
    if len(context) == 2:
        n, delta = context
        return (2 * n * n - 1) * chebyshev_T(n, 1.0 + delta)
    (n,) = context
    return 6.0 * n * n - 3.0


def _factor_value(X, Y) -> float:
    return float(max(np.max(np.sum(np.abs(X) ** 2, axis=1)), np.max(np.sum(np.abs(Y) ** 2, axis=1))))


def _balanced(X, Y):
    a = np.max(np.sum(np.abs(X) ** 2, axis=1))
    b = np.max(np.sum(np.abs(Y) ** 2, axis=1))
    if a == 0 or b == 0:
        return X, Y
    c = (b / a) ** 0.25
    return X * c, Y / c


def _gamma2_upper(M: np.ndarray, iters: int = 400):
    """Best certified factorization ``M = X Y^dag`` found; returns ``(value, X, Y, residual)``.

    Works in the rank subspace: ``X = A G``, ``Y = B G^{-dag}`` with ``A, B``
    from the SVD, minimising a log-sum-exp smoothing of the largest squared
    row norm over ``G`` with a decreasing temperature.
    """
    d1, d2 = M.shape
    U, s, Vh = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0:
        return 0.0, np.zeros((d1, 1)), np.zeros((d2, 1)), 0.0
    r = int(np.sum(s > 1e-13 * s[0]))
    A = U[:, :r] * np.sqrt(s[:r])
    B = Vh[:r].conj().T * np.sqrt(s[:r])
    cands = []
    X, Y = _balanced(A, B)
    cands.append((X, Y))
    # trivial factorizations, balanced: rows of M against the identity and vice versa
    cands.append(_balanced(np.eye(d1), M.conj().T))
    cands.append(_balanced(M, np.eye(d2)))
    if r == 1:
        # rank one straight from the entries: exact when they are, e.g. the all-ones matrix
        i, j = np.unravel_index(np.argmax(np.abs(M)), M.shape)
        cands.append(_balanced(M[:, [j]] / M[i, j], M[[i], :].conj().T))

    complex_ = np.iscomplexobj(M)
    Aw = A if complex_ else A.real
    Bw = B if complex_ else B.real

    def unpack(z):
        if complex_:
            return (z[: r * r] + 1j * z[r * r:]).reshape(r, r)
        return z.reshape(r, r)

    def pack(G):
        return np.concatenate([G.real.ravel(), G.imag.ravel()]) if complex_ else G.ravel()

    def objective_exact(z, tau):
        G = unpack(z)
        try:
            Ginv = np.linalg.inv(G)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros_like(z)
        XA = Aw @ G
        YB = Bw @ Ginv.conj().T
        rx = np.sum(np.abs(XA) ** 2, axis=1)
        ry = np.sum(np.abs(YB) ** 2, axis=1)
        allv = np.concatenate([rx, ry])
        top = allv.max()
        wts = np.exp((allv - top) / tau)
        Zs = wts.sum()
        val = top + tau * np.log(Zs)
        p, q = wts[:d1] / Zs, wts[d1:] / Zs
        # W = G G^dag; f1 = sum p_i (A W A^dag)_ii, f2 = sum q_j (B W^{-1} B^dag)_jj
        Winv = Ginv.conj().T @ Ginv
        Pm = (Aw.conj().T * p) @ Aw
        Qm = (Bw.conj().T * q) @ Bw
        Sm = Winv @ Qm @ Winv
        gradG = 2 * (Pm - Sm) @ G
        return val, pack(gradG) if complex_ else gradG.real.ravel()

    G = np.eye(r, dtype=complex if complex_ else float)
    top0 = _factor_value(Aw @ G, Bw)
    for tau_rel in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4):
        tau = tau_rel * top0
        res = minimize(objective_exact, pack(G), args=(tau,), jac=True, method="L-BFGS-B",
                       options={"maxiter": iters})
        Gn = unpack(res.x)
        if not np.all(np.isfinite(Gn)) or np.linalg.cond(Gn) > 1e12:
            break
        G = Gn
        X, Y = _balanced(Aw @ G, Bw @ np.linalg.inv(G).conj().T)
        cands.append((X, Y))

    best = None
    for X, Y in cands:
        R = M - X @ Y.conj().T
        res_norm = float(np.linalg.norm(R, 2))
        if res_norm > 0:
            # absorb the rounding residual exactly with extra columns
            Ur, sr, Vrh = np.linalg.svd(R, full_matrices=False)
            X = np.hstack([X, Ur * np.sqrt(sr)])
            Y = np.hstack([Y, Vrh.conj().T * np.sqrt(sr)])
        val = _factor_value(X, Y)
        if best is None or val < best[0]:
            best = (val, X, Y, res_norm)
    return best


def _trace_norm(M) -> float:
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def _gamma2_lower(M: np.ndarray, rng, restarts: int = 3, iters: int = 200):
    """Largest ``||M o u v^T||_tr`` over unit ``u, v >= 0`` found; returns ``(value, u v^T)``.

    ``||M o u v^T||_tr`` is convex and 1-homogeneous in each of ``u`` and
    ``v``, so replacing ``u`` by its normalised gradient never decreases it.
    The two vectors are updated alternately from a uniform and several
    random starts.
    """
    d1, d2 = M.shape
    best_val, best = -1.0, None
    for k in range(restarts + 1):
        u = np.ones(d1) if k == 0 else rng.random(d1)
        v = np.ones(d2) if k == 0 else rng.random(d2)
        u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
        val = _trace_norm(M * np.outer(u, v))
        for _ in range(iters):
            # gradients through the polar factor W of M o u v^T
            P, _, Qh = np.linalg.svd(M * np.outer(u, v), full_matrices=False)
            gu = np.real((np.conj(P @ Qh) * M) @ v)
            if np.linalg.norm(gu) > 0:
                u = gu / np.linalg.norm(gu)
            P, _, Qh = np.linalg.svd(M * np.outer(u, v), full_matrices=False)
            gv = np.real(u @ (np.conj(P @ Qh) * M))
            if np.linalg.norm(gv) > 0:
                v = gv / np.linalg.norm(gv)
            new = _trace_norm(M * np.outer(u, v))
            done = new - val < 1e-14 * max(1.0, val)
            val = max(val, new)
            if done:
                break
        if val > best_val:
            best_val, best = val, np.outer(u, v)
    # report the ratio for the stored witness itself
    return _trace_norm(M * best) / _trace_norm(best), best


def gamma2_estimate(M, analytic_context=None, seed: int = 0) -> Gamma2Estimate:
    """Certified bracket ``lower <= gamma_2(M) <= upper``.

    ``upper`` is the largest squared row norm of an explicit factorization
    ``M = X Y^dag`` (returned in ``factors``); ``lower`` is the Schur
    multiplier ratio ``||M o E||_tr / ||E||_tr`` for the returned rank-one
    ``witness`` ``E``. With
    ``analytic_context`` ``(n, delta)`` or ``(n,)`` the corresponding closed
    form is attached.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("M must be a matrix")
    if not np.iscomplexobj(M):
        M = M.astype(float)
    rng = np.random.default_rng(seed)
    up, X, Y, res = _gamma2_upper(M)
    lo, E = _gamma2_lower(M, rng)
    est = Gamma2Estimate(up, lo, gamma2_analytic(analytic_context), (X, Y), E, res)
    if est.lower > est.upper + 1e-8:
        raise VerificationError(f"gamma_2 bracket inverted: lower {lo} > upper {up}")
    return est


def operator_difference_check(A, E, f: ScalarFunction, n_path: int = 21) -> tuple[float, float]:
    """``||f(A + E) - f(A)||`` and ``||E|| max_t gamma2_upper(D_{f, spec(A + tE)})`` on a ``t`` grid."""
    A = _check_hermitian(A, "A")
    E = _check_hermitian(E, "E")
    lhs = float(np.linalg.norm(matrix_function(A + E, f) - matrix_function(A, f), 2))
    worst = 0.0
    for t in np.linspace(0.0, 1.0, n_path):
        lam = np.linalg.eigvalsh(A + t * E)
        worst = max(worst, _gamma2_upper(divided_difference_matrix(f, lam).entries)[0])
    return lhs, float(np.linalg.norm(E, 2)) * worst


# --- smoothing operator -------------------------------------------------------

@dataclass
class SmoothingOperatorBundle:
    n1: int
    m_degree: int
    m_unrounded: float
    theta: float
    epsilon_f: float
    Gamma0: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    spectrum_K: np.ndarray = field(repr=False)
    lower_constant: float = 0.0
    min_eig_lower: float = 0.0
    min_eig_upper: float = 0.0
    sandwich_ok: bool = True

    def summary(self) -> dict:
        return {"n1": self.n1, "m_degree": self.m_degree, "m_unrounded": self.m_unrounded,
                "m_rounding": "ceil", "theta": self.theta, "epsilon_f": self.epsilon_f,
                "lower_constant": self.lower_constant, "min_eig_lower": self.min_eig_lower,
                "min_eig_upper": self.min_eig_upper, "sandwich_ok": self.sandwich_ok}


def _orthogonal_qubit(s):
    s = np.asarray(s, dtype=complex)
    s = s / np.linalg.norm(s)
    return s, np.array([-np.conj(s[1]), np.conj(s[0])])


def build_smoothing_operator(psi0_local_states, n1: int, theta: float, U=None,
                             *, strict: bool = True, max_qubits: int = 12) -> SmoothingOperatorBundle:
    """``Gamma_0``, ``K = U C_m(Gamma_0) U^dag`` and ``P = U P_0 U^dag`` on an ``n1``-qubit register.

    Verifies ``n1**(-2 theta)/4 (I - P) <= K <= 2 (I - P)`` through the
    eigenvalues of both differences. With ``strict`` a violation raises
    :class:`VerificationError`; otherwise it is recorded in ``sandwich_ok``.
    """
    states = list(psi0_local_states)
    if len(states) != n1:
        raise ValueError(f"need {n1} local states, got {len(states)}")
    if n1 > max_qubits:
        raise ValueError(f"register of {n1} qubits exceeds the dense limit {max_qubits}")
    if n1 < 2:
        raise ValueError("n1 must be >= 2")
    m, m_raw = smoothing_degree(n1, theta)
    eps = 1.0 / n1
    W = np.ones((1, 1), dtype=complex)
    for s in states:
        a, b = _orthogonal_qubit(s)
        W = np.kron(W, np.column_stack([a, b]))
    dim = 1 << n1
    flips = np.array([bin(i).count("1") for i in range(dim)])
    gamma_diag = flips / n1
    c_diag = smoothing_poly(m, n1, gamma_diag)
    c_diag = np.where(flips == 0, 0.0, c_diag)
    Wh = W.conj().T
    Gamma0 = (W * gamma_diag) @ Wh
    K0 = (W * c_diag) @ Wh
    P0 = np.outer(W[:, 0], W[:, 0].conj())
    if U is None:
        Um = np.eye(dim)
    else:
        Um = np.asarray(getattr(U, "matrix", U))
        if Um.shape != (dim, dim):
            raise ValueError("U does not match the register size")
    K = Um @ K0 @ Um.conj().T
    P = Um @ P0 @ Um.conj().T
    K = 0.5 * (K + K.conj().T)
    P = 0.5 * (P + P.conj().T)
    I = np.eye(dim)
    c = 0.25 * n1 ** (-2 * theta)
    low = float(np.min(np.linalg.eigvalsh(K - c * (I - P))))
    high = float(np.min(np.linalg.eigvalsh(2 * (I - P) - K)))
    ok = low >= -SANDWICH_SLACK and high >= -SANDWICH_SLACK
    bundle = SmoothingOperatorBundle(n1, m, m_raw, theta, eps, Gamma0, K, P,
                                     np.linalg.eigvalsh(K), c, low, high, ok)
    if strict and not ok:
        raise VerificationError(
            f"operator sandwich violated: min eig {low:.3e} (lower side), {high:.3e} (upper side)")
    return bundle
