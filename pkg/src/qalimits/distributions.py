"""Measurement distributions of simulated states and the short-time distribution bounds.

Bounds covered: Hamming-weight concentration, the isoperimetric boundary
bound (parts i and ii) and the layer/distance bound. Every logarithm is
natural; the choice is recorded in each report.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .operators import bitstring, parse_bitstring

__all__ = [
    "DistributionError",
    "OutputDistribution",
    "BoundReport",
    "output_distribution",
    "hamming_weights",
    "hamming_stats",
    "concentration_rhs",
    "concentration_time_limit",
    "implied_kappa1",
    "concentration_report",
    "hamming_distances_from",
    "hamming_boundary",
    "hamming_boundary_mask",
    "kappa3",
    "isoperimetry_ell",
    "isoperimetry_rhs",
    "isoperimetry_time_limit",
    "isoperimetry_report",
    "layers_report",
    "sample_counts",
    "write_distribution_csv",
    "write_shells_csv",
    "CUBE_LIMIT",
]

CUBE_LIMIT = 20
SLACK = 1e-9
CONVENTIONS = {"log": "natural", "ell_rounding": "ceil"}


class DistributionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OutputDistribution:
    """Probabilities over ``{0,1}^n0`` indexed like the basis (first qubit = leading bit)."""

    n0: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << self.n0,):
            raise DistributionError(f"need {1 << self.n0} probabilities, got {p.shape}")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-9:
            raise DistributionError("probabilities must be non-negative and sum to 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def mask(self, F) -> np.ndarray:
        """Boolean membership vector of a set of bitstrings (or indices)."""
        if isinstance(F, np.ndarray) and F.dtype == bool:
            if F.shape != self.probs.shape:
                raise DistributionError("mask length does not match the distribution")
            return F
        m = np.zeros(1 << self.n0, dtype=bool)
        for x in F:
            m[parse_bitstring(x, self.n0 if isinstance(x, str) else None)] = True
        return m

    def mass(self, F) -> float:
        return float(self.probs[self.mask(F)].sum())

    def as_dict(self) -> dict[str, float]:
        return {bitstring(i, self.n0): float(q) for i, q in enumerate(self.probs)}

    def flipped(self) -> np.ndarray:
        """``p(x_bar)`` for every ``x``."""
        return self.probs[::-1]

    def marginal(self, k: int) -> "OutputDistribution":
        if not 0 <= k <= self.n0:
            raise DistributionError(f"cannot marginalise {self.n0} bits onto {k}")
        return OutputDistribution(k, self.probs.reshape(1 << k, -1).sum(axis=1))


@dataclass
class BoundReport:
    theorem_id: str
    lhs: float
    rhs: float
    params: dict
    vacuous: bool
    satisfied: bool
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def output_distribution(psi, n0: int | None = None) -> OutputDistribution:
    """Marginal of ``|psi|^2`` on the first ``n0`` qubits (all qubits by default)."""
    psi = np.asarray(psi)
    n = int(psi.size).bit_length() - 1
    if psi.ndim != 1 or psi.size != 1 << n:
        raise DistributionError("state must be a vector of length 2**n")
    n0 = n if n0 is None else n0
    if not 0 <= n0 <= n:
        raise DistributionError(f"n0={n0} outside [0, {n}]")
    amp2 = np.abs(psi) ** 2
    return OutputDistribution(n0, amp2.reshape(1 << n0, -1).sum(axis=1))


def hamming_weights(n: int) -> np.ndarray:
    w = np.zeros(1 << n, dtype=np.int64)
    idx = np.arange(1 << n)
    for q in range(n):
        w += (idx >> q) & 1
    return w


def hamming_stats(p: OutputDistribution, psi) -> tuple[float, float, float]:
    """``(E[w_H], Var[w_H], sum_i <Z_i>)`` with the mean checked against ``(n - m)/2``."""
    psi = np.asarray(psi)
    n = int(psi.size).bit_length() - 1
    if p.n0 != n:
        raise DistributionError(f"distribution covers {p.n0} qubits, state has {n}")
    w = hamming_weights(n)
    mean = float(p.probs @ w)
    var = float(p.probs @ (w - mean) ** 2)
    amp2 = np.abs(psi) ** 2
    idx = np.arange(psi.size)
    mag = float(sum(amp2 @ (1 - 2 * ((idx >> (n - 1 - q)) & 1)) for q in range(n)))
    if abs(mean - (n - mag) / 2) > 1e-9:
        raise DistributionError("mean Hamming weight disagrees with the magnetisation")
    return mean, var, mag


# --- concentration -------------------------------------------------------------

def concentration_rhs(c: float, kappa1: float, kappa2: float, n: int) -> float:
    """``3 / (2 c^2) * n**(-(2 kappa2 - kappa1))``."""
    _check_concentration_domain(c, kappa1, kappa2, n)
    return 1.5 / c ** 2 * n ** (-(2 * kappa2 - kappa1))


def _check_concentration_domain(c, kappa1, kappa2, n):
    if not c > 0:
        raise DistributionError("c must be > 0")
    if not kappa1 > 0:
        raise DistributionError("kappa1 must be > 0")
    if not kappa1 / 2 < kappa2 < 0.5:
        raise DistributionError("need kappa1/2 < kappa2 < 1/2")
    if n < 2:
        raise DistributionError("n must be >= 2")


def concentration_time_limit(kappa1: float, g: float, delta: int, n: int) -> float:
    """``kappa1 ln n / (8 g Delta**((2 - kappa1)/kappa1) ln Delta)``."""
    if delta < 2 or g <= 0:
        raise DistributionError("need Delta >= 2 and g > 0")
    # in logs: the power overflows for small kappa1
    log_den = math.log(8 * g * math.log(delta)) + (2 - kappa1) / kappa1 * math.log(delta)
    return kappa1 * math.log(n) * math.exp(-log_den)


def implied_kappa1(T: float, g: float, delta: int, n: int, hi: float = 1.0) -> float | None:
    """Smallest ``kappa1`` in ``(0, hi]`` whose concentration time limit admits ``T``."""
    if concentration_time_limit(hi, g, delta, n) < T:
        return None
    lo = 1e-6
    if concentration_time_limit(lo, g, delta, n) >= T:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if concentration_time_limit(mid, g, delta, n) >= T:
            hi = mid
        else:
            lo = mid
    return hi


def concentration_report(p: OutputDistribution, psi, c: float, kappa1: float, kappa2: float,
                         g: float, delta: int, T: float) -> BoundReport:
    """Tail mass of ``|w_H - (n - m)/2| >= c n^(1/2 + kappa2)`` against ``3/(2c^2) n^-(2 kappa2 - kappa1)``.

    Also records the exact variance of ``zeta = sum_i Z_i`` in the basis
    against ``6 n^(1 + kappa1)``.
    """
    n = p.n0
    _check_concentration_domain(c, kappa1, kappa2, n)
    mean, var, mag = hamming_stats(p, psi)
    threshold = c * n ** (0.5 + kappa2)
    w = hamming_weights(n)
    tail = np.abs(w - (n - mag) / 2) >= threshold - 1e-12
    lhs = float(p.probs[tail].sum())
    rhs = concentration_rhs(c, kappa1, kappa2, n)
    t_max = concentration_time_limit(kappa1, g, delta, n)
    zeta = n - 2 * w
    var_zeta = float(p.probs @ (zeta - mag) ** 2)
    var_bound = 6.0 * n ** (1 + kappa1)
    params = {"c": c, "kappa1": kappa1, "kappa2": kappa2, "g": g, "Delta": delta, "T": T,
              "n": n, "threshold": threshold, "T_limit": t_max, "premise_holds": T <= t_max,
              "magnetization_sum": mag, "mean_weight": mean, "var_weight": var}
    extra = {"var_zeta": var_zeta, "var_zeta_bound": var_bound, "var_ok": var_zeta <= var_bound + SLACK}
    return BoundReport("concentration", lhs, rhs, params, vacuous=rhs >= 1.0,
                       satisfied=lhs <= rhs + SLACK, extra=extra)


# --- Hamming cube boundaries ----------------------------------------------------

def _check_cube(n0: int, limit: int):
    if n0 > limit:
        raise DistributionError(f"n0={n0} exceeds the exhaustive cube limit {limit}")
    if n0 < 0:
        raise DistributionError("n0 must be >= 0")


def hamming_distances_from(mask: np.ndarray, n0: int, max_depth: int | None = None) -> np.ndarray:
    """Distance from every point of ``{0,1}^n0`` to the set ``mask`` by multi-source BFS.

    Points farther than ``max_depth`` (or unreachable, when the set is
    empty) get ``-1``.
    """
    dim = 1 << n0
    dist = np.full(dim, -1, dtype=np.int64)
    frontier = np.flatnonzero(mask)
    dist[frontier] = 0
    depth = 0
    limit = n0 if max_depth is None else min(max_depth, n0)
    while frontier.size and depth < limit:
        depth += 1
        nbrs = np.unique(np.concatenate([frontier ^ (1 << q) for q in range(n0)]))
        nbrs = nbrs[dist[nbrs] < 0]
        dist[nbrs] = depth
        frontier = nbrs
    return dist


def hamming_boundary_mask(inF: np.ndarray, ell: int, n0: int, limit: int = CUBE_LIMIT) -> np.ndarray:
    _check_cube(n0, limit)
    if ell < 0:
        raise DistributionError("ell must be >= 0")
    to_F = hamming_distances_from(inF, n0, ell)
    to_Fc = hamming_distances_from(~inF, n0, ell)
    return (inF & (to_Fc >= 0) & (to_Fc <= ell)) | (~inF & (to_F >= 0) & (to_F <= ell))


def hamming_boundary(F: Iterable, ell: int, n0: int, limit: int = CUBE_LIMIT) -> frozenset[str]:
    """Two-sided ``ell``-boundary of ``F`` in the ``n0``-cube, as bitstrings.

    Points of ``F`` within distance ``ell`` of the complement, together
    with points outside ``F`` within distance ``ell`` of ``F``.
    """
    _check_cube(n0, limit)
    inF = np.zeros(1 << n0, dtype=bool)
    for x in F:
        inF[parse_bitstring(x, n0 if isinstance(x, str) else None)] = True
    out = hamming_boundary_mask(inF, ell, n0, limit)
    return frozenset(bitstring(i, n0) for i in np.flatnonzero(out))


# --- isoperimetry ---------------------------------------------------------------

def kappa3(kappa1: float, kappa2: float) -> float:
    """``kappa1 (1 + kappa2) ln(1 + kappa2) - 1``."""
    return kappa1 * (1 + kappa2) * math.log(1 + kappa2) - 1


def isoperimetry_ell(part: str, kappa1: float, kappa2: float, n0: int, delta: int = 2,
                     theta: float = 0.0) -> float:
    """Unrounded boundary width for part ``"i"`` or ``"ii"``."""
    if part == "i":
        return (kappa1 / (math.sqrt(2) * math.log(delta)) * math.log(n0)
                * n0 ** ((0.5 - theta) * (1 + kappa1)))
    if part == "ii":
        return kappa1 * (1 + kappa2) / 2 * math.log(n0) * math.sqrt(n0)
    raise DistributionError(f"part must be 'i' or 'ii', got {part!r}")


def isoperimetry_rhs(part: str, pF: float, kappa1: float, kappa2: float, n0: int,
                     theta: float = 0.0) -> float:
    if part == "i":
        return 0.125 * (2 * n0 ** (1 + kappa1)) ** (-2 * theta) * pF - 2 * n0 ** (-kappa2)
    if part == "ii":
        return 0.125 * pF - 1.25 * n0 ** (-kappa3(kappa1, kappa2))
    raise DistributionError(f"part must be 'i' or 'ii', got {part!r}")


def isoperimetry_time_limit(part: str, kappa1: float, kappa2: float, g: float, delta: int,
                            n0: int) -> float:
    if part == "i":
        return (kappa1 * math.log(n0)
                / (4 * g * math.log(delta) * delta ** ((1 + 2 * kappa1 + kappa2) / kappa1)))
    if part == "ii":
        return kappa1 * math.log(n0) / (4 * g * (delta - 1))
    raise DistributionError(f"part must be 'i' or 'ii', got {part!r}")


def _check_iso_domain(kappa1, kappa2, g, delta, theta=0.0):
    if not (kappa1 > 0 and kappa2 > 0):
        raise DistributionError("kappa1 and kappa2 must be > 0")
    if not 0 <= theta <= 0.5:
        raise DistributionError("theta must lie in [0, 1/2]")
    if not delta > 1 or not g > 0:
        raise DistributionError("need Delta > 1 and g > 0")


def isoperimetry_report(p: OutputDistribution, F, theta: float, kappa1: float, kappa2: float,
                        g: float, delta: int, T: float, part: str = "i",
                        n_total: int | None = None) -> BoundReport:
    """``p(boundary_ell(F))`` against the part's lower bound, ``ell`` rounded up.

    Part ``"ii"`` requires the whole register to be measured; pass
    ``n_total`` to have that checked.
    """
    _check_iso_domain(kappa1, kappa2, g, delta, theta)
    n0 = p.n0
    if n0 < 2:
        raise DistributionError("need at least two measured qubits")
    if part == "ii" and n_total is not None and n_total != n0:
        raise DistributionError("part ii needs every qubit measured (n0 = n)")
    inF = p.mask(F)
    pF = float(p.probs[inF].sum())
    if pF > 0.5 + 1e-12:
        raise DistributionError(f"p(F) = {pF:.6g} exceeds 1/2")
    ell_raw = isoperimetry_ell(part, kappa1, kappa2, n0, delta, theta)
    ell = math.ceil(ell_raw - 1e-12)
    lhs = float(p.probs[hamming_boundary_mask(inF, min(ell, n0), n0)].sum())
    rhs = isoperimetry_rhs(part, pF, kappa1, kappa2, n0, theta)
    t_max = isoperimetry_time_limit(part, kappa1, kappa2, g, delta, n0)
    params = {"part": part, "theta": theta, "kappa1": kappa1, "kappa2": kappa2, "g": g,
              "Delta": delta, "T": T, "n0": n0, "p_F": pF, "ell": ell, "ell_unrounded": ell_raw,
              "T_limit": t_max, "premise_holds": T <= t_max}
    if part == "ii":
        params["kappa3"] = kappa3(kappa1, kappa2)
    return BoundReport(f"isoperimetry-{part}", lhs, rhs, params,
                       vacuous=rhs <= 0 or ell >= n0, satisfied=lhs >= rhs - SLACK)


def layers_report(p: OutputDistribution, F1, F2, kappa1: float, kappa2: float, g: float,
                  delta: int, T: float, ell: int | None = None) -> BoundReport:
    """Hamming distance of two sets against ``16 ell/mu + (10/mu) n^-(kappa3 - 1)``.

    Also lists the shell masses ``p(K_d)`` with
    ``K_d = {(d-1) ell < dist(x, F1) <= d ell}`` (``K_0 = F1``) and the odd
    ``d0`` minimising ``p(K_d0) + p(K_d0+1)``, compared with
    ``(1 - 2 mu) / (D/(2 ell) - 2)``. ``ell`` may be overridden to get a
    readable shell structure at small ``n``; the override is recorded.
    """
    _check_iso_domain(kappa1, kappa2, g, delta)
    n = p.n0
    _check_cube(n, CUBE_LIMIT)
    m1, m2 = p.mask(F1), p.mask(F2)
    if np.any(m1 & m2):
        raise DistributionError("F1 and F2 must be disjoint")
    mu = min(float(p.probs[m1].sum()), float(p.probs[m2].sum()))
    d1 = hamming_distances_from(m1, n)
    D = int(d1[m2].min()) if m1.any() and m2.any() else None
    ell_raw = isoperimetry_ell("ii", kappa1, kappa2, n)
    ell_used = math.ceil(ell_raw - 1e-12) if ell is None else int(ell)
    if ell_used < 1:
        raise DistributionError("ell must be >= 1")
    k3 = kappa3(kappa1, kappa2)
    t_max = isoperimetry_time_limit("ii", kappa1, kappa2, g, delta, n)
    if mu > 0:
        rhs = 16 * ell_used / mu + 10 / mu * n ** (-(k3 - 1))
        rhs_tight = (16 * ell_used / mu + 10 * D / mu * n ** (-k3)) if D is not None else math.inf
    else:
        rhs = rhs_tight = math.inf
    lhs = float(D) if D is not None else math.inf
    params = {"kappa1": kappa1, "kappa2": kappa2, "kappa3": k3, "g": g, "Delta": delta, "T": T,
              "n": n, "D": D, "mu": mu, "ell": ell_used, "ell_unrounded": ell_raw,
              "ell_overridden": ell is not None, "T_limit": t_max, "premise_holds": T <= t_max,
              "rhs_tight": rhs_tight}
    # shells between F1 and F2
    shells = []
    if D is not None:
        n_shells = math.ceil(D / ell_used)
        for d in range(n_shells):
            sel = m1 if d == 0 else (d1 > (d - 1) * ell_used) & (d1 <= d * ell_used)
            shells.append({"d": d, "lower": (d - 1) * ell_used if d else None,
                           "upper": d * ell_used if d else 0, "mass": float(p.probs[sel].sum())})
    pairs = [(shells[d]["mass"] + shells[d + 1]["mass"], d)
             for d in range(1, len(shells) - 1, 2) if D is not None and d < D / ell_used - 1]
    denom = D / (2 * ell_used) - 2 if D is not None else -1.0
    shell_bound = (1 - 2 * mu) / denom if denom > 0 else None
    d0 = min(pairs)[1] if pairs else None
    extra = {"shells": shells, "d0": d0, "d0_pair_mass": min(pairs)[0] if pairs else None,
             "shell_bound": shell_bound,
             "shell_bound_holds": (None if shell_bound is None or not pairs
                                   else min(pairs)[0] <= shell_bound + SLACK)}
    return BoundReport("layers", lhs, rhs, params, vacuous=mu == 0 or rhs >= n,
                       satisfied=lhs < rhs + SLACK, extra=extra)


# --- sampling and CSV -----------------------------------------------------------

def sample_counts(p: OutputDistribution, n_samples: int, seed: int) -> dict[str, int]:
    """Seeded measurement counts; for illustration only, bound checks use exact ``p``."""
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_samples, p.probs / p.probs.sum())
    return {bitstring(i, p.n0): int(k) for i, k in enumerate(counts) if k}


def write_distribution_csv(p: OutputDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bitstring", "probability"])
        for i, q in enumerate(p.probs):
            w.writerow([bitstring(i, p.n0), repr(float(q))])


def write_shells_csv(report: BoundReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "lower", "upper", "mass"])
        for s in report.extra.get("shells", []):
            w.writerow([s["d"], "" if s["lower"] is None else s["lower"], s["upper"], repr(s["mass"])])
