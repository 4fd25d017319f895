"""Edge-local time-dependent Hamiltonians ``H(t) = sum_e u_e(t) h_e``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .graphs import InteractionGraph, VertexSet, l_boundary
from .operators import X, Z, embed

__all__ = [
    "HamiltonianError",
    "Schedule",
    "LocalTerm",
    "TimeDependentHamiltonian",
    "build_maxcut_annealer",
    "coupling_bound",
    "restrict_hamiltonian",
    "EDGE_CUT_TERM",
    "DRIVER_TERM",
]

HERMITIAN_ATOL = 1e-12
DRIVER_TERM = -X
EDGE_CUT_TERM = -0.5 * (np.eye(4) - np.kron(Z, Z))


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear control ``u(t)`` on ``[0, horizon]``.

    Every kind is stored as breakpoints ``(time, value)``; ``kind`` only
    labels how it was built.
    """

    kind: str
    breakpoints: tuple[tuple[float, float], ...]
    horizon: float

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        T = float(self.horizon)
        if not np.isfinite(T) or T < 0:
            raise HamiltonianError(f"horizon must be finite and >= 0, got {self.horizon}")
        times = np.array([p[0] for p in pts])
        vals = np.array([p[1] for p in pts])
        if len(pts) < 1 or not np.all(np.isfinite(times)) or not np.all(np.isfinite(vals)):
            raise HamiltonianError("schedule breakpoints must be finite")
        if np.any(np.diff(times) < 0) or times[0] != 0.0 or not np.isclose(times[-1], T):
            raise HamiltonianError("breakpoint times must increase from 0 to the horizon")

    @classmethod
    def constant(cls, value: float, horizon: float) -> "Schedule":
        return cls("constant", ((0.0, value), (horizon, value)), horizon)

    @classmethod
    def linear_ramp(cls, horizon: float) -> "Schedule":
        return cls("linear_ramp", ((0.0, 0.0), (horizon, 1.0)), horizon)

    @classmethod
    def one_minus_ramp(cls, horizon: float) -> "Schedule":
        return cls("one_minus_ramp", ((0.0, 1.0), (horizon, 0.0)), horizon)

    @classmethod
    def piecewise_linear(cls, points: Sequence[tuple[float, float]], horizon: float) -> "Schedule":
        return cls("piecewise_linear", tuple(points), horizon)

    def __call__(self, t):
        times, vals = zip(*self.breakpoints)
        if self.horizon == 0:
            return np.full_like(np.asarray(t, dtype=float), vals[0]) if np.ndim(t) else vals[0]
        out = np.interp(t, times, vals)
        return float(out) if np.ndim(out) == 0 else out

    def complement(self) -> "Schedule":
        """``1 - u(t)``."""
        kind = {"linear_ramp": "one_minus_ramp", "one_minus_ramp": "linear_ramp"}.get(
            self.kind, self.kind)
        return Schedule(kind, tuple((t, 1.0 - v) for t, v in self.breakpoints), self.horizon)

    def rescaled(self, horizon: float) -> "Schedule":
        """Same shape stretched to a new horizon."""
        if self.horizon == 0:
            return Schedule(self.kind, ((0.0, self.breakpoints[0][1]), (horizon, self.breakpoints[-1][1])), horizon)
        s = horizon / self.horizon
        return Schedule(self.kind, tuple((t * s, v) for t, v in self.breakpoints), horizon)

    def extreme_abs(self) -> float:
        return max(abs(v) for _, v in self.breakpoints)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "breakpoints": [list(p) for p in self.breakpoints],
                "horizon": self.horizon}


@dataclass(frozen=True, eq=False)
class LocalTerm:
    edge: tuple[int, int]
    matrix: np.ndarray
    schedule: Schedule

    def __post_init__(self):
        u, v = (int(x) for x in self.edge)
        object.__setattr__(self, "edge", (u, v))
        m = np.asarray(self.matrix)
        want = (2, 2) if u == v else (4, 4)
        if m.shape != want:
            raise HamiltonianError(f"term on {self.edge} needs a {want} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_ATOL:
            raise HamiltonianError(f"term on {self.edge} is not Hermitian")
        if np.all(np.isreal(m)):
            m = m.real
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def qubits(self) -> tuple[int, ...]:
        u, v = self.edge
        return (u,) if u == v else (u, v)

    @cached_property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True, eq=False)
class TimeDependentHamiltonian:
    """``H(t) = sum_e u_e(t) h_e`` on the vertices of ``graph``, one qubit per vertex."""

    graph: InteractionGraph
    terms: tuple[LocalTerm, ...]
    horizon: float
    coupling_bound: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        edge_set = set(self.graph.edges)
        for term in self.terms:
            e = tuple(sorted(term.edge))
            if e not in edge_set:
                raise HamiltonianError(f"term edge {term.edge} is not an edge of the graph")
        if self.coupling_bound is None:
            object.__setattr__(self, "coupling_bound", coupling_bound(self))

    @property
    def n_qubits(self) -> int:
        return self.graph.n_vertices

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def max_degree(self) -> int:
        return self.graph.max_degree

    @cached_property
    def is_real(self) -> bool:
        return all(np.isrealobj(t.matrix) for t in self.terms)

    @cached_property
    def groups(self) -> tuple[tuple[Schedule, sp.csr_matrix], ...]:
        """Terms summed per distinct schedule: ``H(t) = sum_k u_k(t) M_k``."""
        acc: dict[Schedule, sp.csr_matrix] = {}
        for term in self.terms:
            m = embed(term.matrix, term.qubits, self.n_qubits)
            acc[term.schedule] = acc[term.schedule] + m if term.schedule in acc else m
        return tuple((s, m.tocsr()) for s, m in acc.items())

    @cached_property
    def _dense_groups(self):
        return tuple((s, m.toarray()) for s, m in self.groups)

    def sparse(self, t: float) -> sp.csr_matrix:
        dtype = float if self.is_real else complex
        out = sp.csr_matrix((self.dim, self.dim), dtype=dtype)
        for s, m in self.groups:
            out = out + s(t) * m
        return out

    def dense(self, t: float) -> np.ndarray:
        dtype = float if self.is_real else complex
        out = np.zeros((self.dim, self.dim), dtype=dtype)
        for s, m in self._dense_groups:
            out += s(t) * m
        return out

    def dense_combination(self, weights: Sequence[tuple[float, float]]) -> np.ndarray:
        """``sum_i w_i H(t_i)`` for ``weights = [(t_i, w_i), ...]``, built in one pass."""
        dtype = float if self.is_real else complex
        out = np.zeros((self.dim, self.dim), dtype=dtype)
        for s, m in self._dense_groups:
            c = sum(w * s(t) for t, w in weights)
            if c != 0:
                out += c * m
        return out

    def sparse_combination(self, weights: Sequence[tuple[float, float]]) -> sp.csr_matrix:
        dtype = float if self.is_real else complex
        out = sp.csr_matrix((self.dim, self.dim), dtype=dtype)
        for s, m in self.groups:
            c = sum(w * s(t) for t, w in weights)
            if c != 0:
                out = out + c * m
        return out

    def with_terms(self, terms: Iterable[LocalTerm]) -> "TimeDependentHamiltonian":
        return TimeDependentHamiltonian(self.graph, tuple(terms), self.horizon,
                                        self.coupling_bound, dict(self.meta))

    def on_register(self, vertices: Iterable[int]) -> tuple["TimeDependentHamiltonian", list[int]]:
        """Terms supported inside ``vertices``, relabelled onto a register of that size.

        Returns the new Hamiltonian and the list mapping new qubit -> old vertex.
        """
        sub, keep = self.graph.induced(vertices)
        index = {v: i for i, v in enumerate(keep)}
        terms = [LocalTerm((index[t.edge[0]], index[t.edge[1]]), t.matrix, t.schedule)
                 for t in self.terms if t.edge[0] in index and t.edge[1] in index]
        return TimeDependentHamiltonian(sub, tuple(terms), self.horizon, self.coupling_bound,
                                        dict(self.meta)), keep


def coupling_bound(H: TimeDependentHamiltonian, t_samples: int = 1024) -> float:
    """``max_{t, e} |u_e(t)| ||h_e||`` over a grid that includes every schedule breakpoint."""
    if t_samples < 2:
        raise HamiltonianError("t_samples must be >= 2")
    grid = np.linspace(0.0, H.horizon, t_samples)
    best = 0.0
    for s in {t.schedule for t in H.terms}:
        times = np.union1d(grid, [p[0] for p in s.breakpoints])
        umax = float(np.max(np.abs(s(times))))
        norms = [t.norm for t in H.terms if t.schedule == s]
        best = max(best, umax * max(norms))
    return best


def build_maxcut_annealer(G: InteractionGraph, ramp: Schedule) -> TimeDependentHamiltonian:
    """Transverse-field annealer ``(1 - u) B + u C`` for MaxCut on ``G``.

    The driver ``-X_v`` on each vertex is a loop term scheduled by ``1 - u``;
    each proper edge carries ``-(I - Z Z)/2`` scheduled by ``u``. Loops of
    ``G`` itself carry no cost term. The interaction graph is ``G`` plus one
    loop per vertex, so its max degree is ``Delta + 1``.
    """
    start, end = ramp.breakpoints[0][1], ramp.breakpoints[-1][1]
    if abs(start) > 1e-12 or abs(end - 1.0) > 1e-12:
        raise HamiltonianError("MaxCut ramp must satisfy u(0) = 0 and u(T) = 1")
    if any(v < -1e-12 or v > 1 + 1e-12 for _, v in ramp.breakpoints):
        raise HamiltonianError("MaxCut ramp must stay inside [0, 1]")
    driver = ramp.complement()
    terms = [LocalTerm((v, v), DRIVER_TERM, driver) for v in range(G.n_vertices)]
    terms += [LocalTerm(e, EDGE_CUT_TERM, ramp) for e in G.proper_edges]
    aug = InteractionGraph(G.n_vertices, G.edges + tuple((v, v) for v in range(G.n_vertices)))
    meta = {"kind": "maxcut", "base_graph": G, "base_max_degree": G.max_degree,
            "effective_max_degree": aug.max_degree}
    return TimeDependentHamiltonian(aug, tuple(terms), ramp.horizon, meta=meta)


def restrict_hamiltonian(H: TimeDependentHamiltonian, A: Iterable[int], L: int
                         ) -> TimeDependentHamiltonian:
    """Keep the terms whose support lies in ``A`` union its ``L``-boundary."""
    A = VertexSet(A)
    region = A | l_boundary(H.graph, A, L)
    kept = [t for t in H.terms if t.edge[0] in region and t.edge[1] in region]
    meta = dict(H.meta, restricted_to=sorted(region), restriction_L=L)
    return TimeDependentHamiltonian(H.graph, tuple(kept), H.horizon, H.coupling_bound, meta)
