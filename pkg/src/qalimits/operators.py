"""Qubit operator helpers.

Basis index convention: qubit 0 is the most significant bit, so the basis
state ``|x_0 x_1 ... x_{n-1}>`` has index ``sum_q x_q 2**(n-1-q)`` and the
bitstring ``"x_0x_1..."`` reads left to right in qubit order.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.diag([1.0, -1.0])
KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
KET_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
KET_MINUS = np.array([1.0, -1.0]) / np.sqrt(2)


def bit_of(index, qubit: int, n: int):
    return (np.asarray(index) >> (n - 1 - qubit)) & 1


def embed(op, qubits, n: int) -> sp.csr_matrix:
    """Sparse ``2**n`` matrix of ``op`` acting on ``qubits`` (in that order)."""
    op = np.asarray(op)
    qubits = tuple(int(q) for q in qubits)
    k = len(qubits)
    if op.shape != (1 << k, 1 << k):
        raise ValueError(f"operator shape {op.shape} does not match {k} qubits")
    if len(set(qubits)) != k or any(not 0 <= q < n for q in qubits):
        raise ValueError(f"bad qubit tuple {qubits} for n={n}")
    dim = 1 << n
    idx = np.arange(dim)
    shifts = [n - 1 - q for q in qubits]
    mask = sum(1 << s for s in shifts)
    base = idx[(idx & mask) == 0]
    rows_sub, cols_sub = np.nonzero(op)
    rows, cols, vals = [], [], []

    def spread(sub):
        out = 0
        for pos, s in enumerate(shifts):
            out |= ((sub >> (k - 1 - pos)) & 1) << s
        return out

    for r, c in zip(rows_sub, cols_sub):
        rows.append(base | spread(int(r)))
        cols.append(base | spread(int(c)))
        vals.append(np.full(base.shape, op[r, c]))
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=op.dtype)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def product_state(local_states) -> np.ndarray:
    return reduce(np.kron, [np.asarray(s, dtype=complex) for s in local_states])


def plus_state(n: int) -> np.ndarray:
    return np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=complex)


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def global_flip(n: int) -> sp.csr_matrix:
    """``X`` on every qubit as a permutation matrix: index ``i -> i ^ (2**n - 1)``."""
    dim = 1 << n
    idx = np.arange(dim)
    return sp.csr_matrix((np.ones(dim), (idx ^ (dim - 1), idx)), shape=(dim, dim))


def spectral_norm(M) -> float:
    """Largest singular value; dense SVD up to 4096, Lanczos-based estimate above."""
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if M.ndim == 1:
        return float(np.linalg.norm(M))
    if M.shape[0] <= 4096:
        if np.allclose(M, M.conj().T, atol=0, rtol=0):
            return float(np.max(np.abs(np.linalg.eigvalsh(M)))) if M.size else 0.0
        return float(np.linalg.norm(M, 2))
    import scipy.sparse.linalg as spla

    return float(spla.svds(M, k=1, return_singular_vectors=False)[0])


def bitstring(index: int, n: int) -> str:
    return format(int(index), f"0{n}b") if n else ""


def parse_bitstring(x, n: int | None = None) -> int:
    if isinstance(x, str):
        if n is not None and len(x) != n:
            raise ValueError(f"bitstring {x!r} has length {len(x)}, expected {n}")
        return int(x, 2) if x else 0
    if isinstance(x, (int, np.integer)):
        return int(x)
    bits = [int(b) for b in x]
    if n is not None and len(bits) != n:
        raise ValueError(f"bit sequence has length {len(bits)}, expected {n}")
    return int("".join(map(str, bits)) or "0", 2)
