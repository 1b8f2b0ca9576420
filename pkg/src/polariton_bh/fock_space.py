"""Truncated bosonic Fock space for an array of cavities.

States are occupation vectors ``(n_1, ..., n_M)`` with ``sum(n) <= max_total``,
ordered by total particle number and then lexicographically.  Operators are
returned as ``scipy.sparse.csr_matrix``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_DIM = 200_000


class BasisTooLargeError(ValueError):
    """Requested Fock space exceeds the configured dimension cap."""


def basis_dimension(site_count: int, max_total: int) -> int:
    """Number of occupation vectors of ``site_count`` modes with at most ``max_total`` bosons."""
    return comb(max_total + site_count, site_count)


def _compositions(total: int, parts: int):
    # lexicographically ascending
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    site_count: int
    max_total: int
    states: np.ndarray = field(repr=False)
    index: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def sector(self, total: int) -> np.ndarray:
        """Indices of basis states holding exactly ``total`` bosons."""
        return np.flatnonzero(self.totals == total)

    def state_index(self, occ: Sequence[int]) -> int:
        return state_index(self, occ)


def enumerate_basis(site_count: int, max_total: int, max_dim: int = DEFAULT_MAX_DIM) -> FockBasis:
    if site_count < 1:
        raise ValueError(f"site_count must be >= 1, got {site_count}")
    if max_total < 0:
        raise ValueError(f"max_total must be >= 0, got {max_total}")
    dim = basis_dimension(site_count, max_total)
    if dim > max_dim:
        raise BasisTooLargeError(
            f"Fock space for M={site_count}, N_max={max_total} has {dim} states (cap {max_dim})"
        )
    states = [occ for n in range(max_total + 1) for occ in _compositions(n, site_count)]
    arr = np.array(states, dtype=np.int64).reshape(dim, site_count)
    arr.setflags(write=False)
    return FockBasis(site_count, max_total, arr, {occ: k for k, occ in enumerate(states)})


def state_index(basis: FockBasis, occ: Sequence[int]) -> int:
    key = tuple(int(n) for n in occ)
    try:
        return basis.index[key]
    except KeyError:
        raise KeyError(
            f"occupation {key} is not in the basis (M={basis.site_count}, N_max={basis.max_total})"
        ) from None


def _check_site(basis: FockBasis, site: int) -> None:
    if not 0 <= site < basis.site_count:
        raise IndexError(f"site {site} out of range for {basis.site_count} sites")


def ladder_operator(basis: FockBasis, site: int) -> sp.csr_matrix:
    """Annihilation operator of ``site``; its adjoint is the truncated creation operator."""
    _check_site(basis, site)
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        k = int(occ[site])
        if k == 0:
            continue
        target = list(occ)
        target[site] -= 1
        rows.append(basis.index[tuple(target)])
        cols.append(col)
        vals.append(np.sqrt(k))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=float)


def creation_operator(basis: FockBasis, site: int) -> sp.csr_matrix:
    return ladder_operator(basis, site).conj().T.tocsr()


def number_operator(basis: FockBasis, site: int) -> sp.csr_matrix:
    _check_site(basis, site)
    return sp.diags(basis.states[:, site].astype(float), format="csr")


def total_number_operator(basis: FockBasis) -> sp.csr_matrix:
    return sp.diags(basis.totals.astype(float), format="csr")


@dataclass(frozen=True)
class CavityGraph:
    """Nearest-neighbour structure of the cavity array (undirected, simple)."""

    site_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.site_count < 1:
            raise ValueError("graph needs at least one site")
        seen = set()
        edges = []
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise ValueError(f"self-loop at site {i}")
            if not (0 <= i < self.site_count and 0 <= j < self.site_count):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.site_count - 1}")
            key = frozenset((i, j))
            if key in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add(key)
            edges.append((i, j))
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def cycle(cls, m: int) -> "CavityGraph":
        """Ring of ``m`` cavities with periodic boundary conditions."""
        if m == 1:
            return cls(1, ())
        if m == 2:
            return cls(2, ((0, 1),))
        return cls(m, tuple((i, (i + 1) % m) for i in range(m)))

    @classmethod
    def chain(cls, m: int) -> "CavityGraph":
        return cls(m, tuple((i, i + 1) for i in range(m - 1)))

    @classmethod
    def from_edges(cls, site_count: int, edges: Iterable[Sequence[int]]) -> "CavityGraph":
        return cls(site_count, tuple(tuple(e) for e in edges))

    def relabel(self, perm: Sequence[int]) -> "CavityGraph":
        return CavityGraph(self.site_count, tuple((perm[i], perm[j]) for i, j in self.edges))


def hopping_operator(basis: FockBasis, edge: Sequence[int]) -> sp.csr_matrix:
    """``a_i^dag a_j + a_j^dag a_i`` on the basis; number conserving and Hermitian."""
    i, j = (int(x) for x in edge)
    _check_site(basis, i)
    _check_site(basis, j)
    if i == j:
        raise ValueError(f"hopping edge must join distinct sites, got ({i}, {j})")
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        nj = int(occ[j])
        if nj == 0:
            continue
        target = list(occ)
        target[j] -= 1
        target[i] += 1
        # same factorisation as ladder products so entries agree bitwise
        amp = np.sqrt(nj) * np.sqrt(target[i])
        rows.append(basis.index[tuple(target)])
        cols.append(col)
        vals.append(amp)
    half = sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=float)
    return (half + half.T).tocsr()


def is_hermitian(op, atol: float = 0.0) -> bool:
    diff = op - op.conj().T
    if sp.issparse(diff):
        diff = diff.tocoo()
        return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= atol
    return float(np.max(np.abs(diff), initial=0.0)) <= atol
