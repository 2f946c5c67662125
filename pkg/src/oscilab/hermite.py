"""Hermite eigenbasis of the quantum harmonic oscillator -del^2 + |x|^2.

Provides orthonormal Hermite functions on R^d with total-degree truncation,
Gauss-Hermite quadrature adapted to function space (the Gaussian factor is
folded into the weights analytically, so nothing overflows at large node
counts), and analysis/synthesis between coefficient and physical space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "BasisGrid",
    "BasisError",
    "build_basis",
    "cached_basis",
    "eigenvalue",
    "enumerate_multi_indices",
    "hermite_function_values",
    "gauss_hermite_nodes",
    "audit_axis",
    "save_basis",
    "load_basis",
]

BASIS_CACHE_VERSION = 1

# hard ceiling on the coefficient enumeration; build_basis refuses beyond it
DEFAULT_COEFF_BUDGET = 200_000

AUDIT_POINTS_PER_UNIT = 16
AUDIT_MARGIN = 4.0


class BasisError(ValueError):
    """Invalid basis construction request or basis/field mismatch."""


def hermite_function_values(n_max: int, x: np.ndarray) -> np.ndarray:
    """Values of the orthonormal 1-D Hermite functions 0..n_max at points x.

    Uses the stable normalized three-term recurrence
    ``h_{n+1}(x) = x sqrt(2/(n+1)) h_n(x) - sqrt(n/(n+1)) h_{n-1}(x)``
    starting from ``h_0(x) = pi^(-1/4) exp(-x^2/2)``.  Returns an array of
    shape (n_max + 1, len(x)).

    The recurrence runs on mantissa/exponent pairs: the Gaussian seed
    underflows past |x| ~ 38.6 although the high-order values it feeds are
    O(1), so each point carries a power-of-two exponent that the growth of
    the recurrence pays back (log-space seeding, rescaled on overflow).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((n_max + 1, x.size))
    log_h0 = -0.5 * x * x - 0.25 * np.log(np.pi)
    exponent = np.floor(log_h0 / np.log(2.0)).astype(np.int64)
    prev = np.exp(log_h0 - exponent * np.log(2.0))  # mantissa of h_0, O(1)
    out[0] = np.ldexp(prev, exponent)
    if n_max == 0:
        return out
    cur = np.sqrt(2.0) * x * prev
    out[1] = np.ldexp(cur, exponent)
    for k in range(1, n_max):
        nxt = np.sqrt(2.0 / (k + 1)) * x * cur - np.sqrt(k / (k + 1.0)) * prev
        big = np.abs(nxt) > 2.0**300
        if np.any(big):
            # shift the scale into the exponent; the pair keeps its ratio
            nxt = np.where(big, nxt * 2.0**-600, nxt)
            cur = np.where(big, cur * 2.0**-600, cur)
            exponent = exponent + np.where(big, 600, 0)
        out[k + 1] = np.ldexp(nxt, exponent)
        prev, cur = cur, nxt
    return out


def gauss_hermite_nodes(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes and function-space weights of size q.

    The nodes are the zeros of the degree-q Hermite polynomial (Golub-Welsch
    eigenvalues, polished with two Newton steps).  The weights are the
    classical Gauss-Hermite weights with the Gaussian already divided out,
    via the identity ``w_j e^{x_j^2} = 1 / (q h_{q-1}(x_j)^2)``, so that

        sum_j w_j f(x_j) == integral f(x) dx

    exactly for f = (polynomial of degree <= 2q-1) * exp(-x^2).  Computing
    the folded weight directly keeps everything finite; the raw weights
    underflow past ~180 nodes.
    """
    if q < 1:
        raise BasisError(f"quadrature size must be >= 1, got {q}")
    if q == 1:
        nodes = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, q) / 2.0)
        nodes = eigh_tridiagonal(np.zeros(q), off, eigvals_only=True)
    for _ in range(2):
        table = hermite_function_values(q, nodes)
        # d/dx h_q = sqrt(2q) h_{q-1} - x h_q
        deriv = np.sqrt(2.0 * q) * table[q - 1] - nodes * table[q]
        nodes = nodes - table[q] / deriv
    table = hermite_function_values(q - 1, nodes)
    weights = 1.0 / (q * table[q - 1] ** 2)
    return nodes, weights


def enumerate_multi_indices(dim: int, max_degree: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices n in N^dim with |n| <= max_degree, graded lexicographic."""
    out = []
    for total in range(max_degree + 1):
        for head in itertools.product(range(total + 1), repeat=dim - 1):
            rest = total - sum(head)
            if rest >= 0:
                out.append(head + (rest,))
    # graded lexicographic: sort each degree block lexicographically
    out.sort(key=lambda n: (sum(n), n))
    return tuple(out)


def eigenvalue(index, dim: int) -> float:
    """Eigenvalue of -del^2 + |x|^2 on the Hermite function h_n: 2|n| + d."""
    if np.isscalar(index):
        total = int(index)
    else:
        total = int(sum(index))
    if total < 0:
        raise BasisError(f"multi-index must be non-negative, got {index}")
    return float(2 * total + dim)


@dataclass
class BasisGrid:
    """Hermite basis of R^dim truncated at total degree max_degree.

    Immutable after construction; shareable across workers.  ``weights`` are
    adjusted so that ``sum_j weights[j] f(nodes[j])`` approximates the
    integral of f over R^dim for smooth decaying f, and is exact when f is a
    polynomial of per-axis degree <= 2*quad_per_axis - 1 times the squared
    Gaussian.  ``eval_table[k, j]`` holds h_{indices[k]}(nodes[j]).
    """

    dim: int
    max_degree: int
    quad_per_axis: int
    indices: tuple[tuple[int, ...], ...]
    nodes: np.ndarray        # (n_nodes, dim)
    weights: np.ndarray      # (n_nodes,)
    eval_table: np.ndarray   # (n_indices, n_nodes)
    axis_nodes: np.ndarray   # (quad_per_axis,)
    axis_weights: np.ndarray
    degrees: np.ndarray = field(init=False)   # |n| per enumerated index
    lambda2: np.ndarray = field(init=False)   # 2|n| + dim per index

    def __post_init__(self):
        self.degrees = np.array([sum(n) for n in self.indices], dtype=int)
        self.lambda2 = 2.0 * self.degrees + self.dim
        self._aux: dict = {}

    @property
    def size(self) -> int:
        return len(self.indices)

    def index_position(self, index) -> int:
        if "pos" not in self._aux:
            self._aux["pos"] = {n: k for k, n in enumerate(self.indices)}
        key = (int(index),) if np.isscalar(index) else tuple(int(i) for i in index)
        try:
            return self._aux["pos"][key]
        except KeyError:
            raise BasisError(f"multi-index {key} outside basis (d={self.dim}, N={self.max_degree})")

    def eval_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate every basis function at arbitrary points, shape (size, n_points).

        Off-node synthesis works directly through the recurrence, so there is
        no interpolation error floor.
        """
        pts = np.asarray(points, dtype=float)
        if self.dim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise BasisError(f"points must have shape (m, {self.dim})")
        axis_tables = [hermite_function_values(self.max_degree, pts[:, a]) for a in range(self.dim)]
        out = np.ones((self.size, pts.shape[0]))
        for k, n in enumerate(self.indices):
            row = axis_tables[0][n[0]]
            for a in range(1, self.dim):
                row = row * axis_tables[a][n[a]]
            out[k] = row
        return out

    def audit_points(self) -> np.ndarray:
        """Uniform audit grid on [-L, L]^dim used for sup and L^r norms.

        L = sqrt(2N + d) + 4 covers the classically allowed region plus a
        margin; the eigenfunctions decay super-exponentially beyond it.
        """
        if "audit_points" not in self._aux:
            ax = audit_axis(self.max_degree, self.dim)
            if self.dim == 1:
                pts = ax.reshape(-1, 1)
            else:
                grids = np.meshgrid(*([ax] * self.dim), indexing="ij")
                pts = np.stack([g.ravel() for g in grids], axis=1)
            self._aux["audit_points"] = pts
        return self._aux["audit_points"]

    def audit_table(self) -> np.ndarray:
        if "audit_table" not in self._aux:
            self._aux["audit_table"] = self.eval_at(self.audit_points())
        return self._aux["audit_table"]

    def audit_cell_volume(self) -> float:
        ax = audit_axis(self.max_degree, self.dim)
        return float((ax[1] - ax[0]) ** self.dim)


def audit_axis(max_degree: int, dim: int) -> np.ndarray:
    half_width = np.sqrt(2.0 * max_degree + dim) + AUDIT_MARGIN
    n_pts = int(np.ceil(2.0 * half_width * AUDIT_POINTS_PER_UNIT)) + 1
    return np.linspace(-half_width, half_width, n_pts)


def build_basis(
    dim: int,
    max_degree: int,
    quad_per_axis: int,
    coeff_budget: int = DEFAULT_COEFF_BUDGET,
) -> BasisGrid:
    """Construct the truncated Hermite basis with its quadrature.

    Requires ``quad_per_axis >= 2 (max_degree + 1)`` so that the Gram matrix
    of the enumerated functions is the identity up to rounding, and rejects
    enumerations larger than ``coeff_budget``.
    """
    if dim < 1:
        raise BasisError(f"dim must be >= 1, got {dim}")
    if dim > 3:
        raise BasisError(f"dim must be <= 3, got {dim}")
    if max_degree < 0:
        raise BasisError(f"max_degree must be >= 0, got {max_degree}")
    if quad_per_axis < 2 * (max_degree + 1):
        raise BasisError(
            f"quad_per_axis={quad_per_axis} below exactness threshold "
            f"2*(max_degree+1)={2 * (max_degree + 1)}"
        )
    indices = enumerate_multi_indices(dim, max_degree)
    if len(indices) > coeff_budget:
        raise BasisError(
            f"enumeration size {len(indices)} exceeds coefficient budget {coeff_budget}"
        )
    axis_nodes, axis_weights = gauss_hermite_nodes(quad_per_axis)
    axis_table = hermite_function_values(max_degree, axis_nodes)

    if dim == 1:
        nodes = axis_nodes.reshape(-1, 1)
        weights = axis_weights.copy()
        eval_table = np.array([axis_table[n[0]] for n in indices])
    else:
        grids = np.meshgrid(*([axis_nodes] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*([axis_weights] * dim), indexing="ij")
        weights = np.ones(nodes.shape[0])
        for w in wgrids:
            weights = weights * w.ravel()
        eval_table = np.empty((len(indices), nodes.shape[0]))
        for k, n in enumerate(indices):
            prod = axis_table[n[0]]
            for a in range(1, dim):
                prod = np.multiply.outer(prod, axis_table[n[a]])
            eval_table[k] = prod.ravel()

    return BasisGrid(
        dim=dim,
        max_degree=max_degree,
        quad_per_axis=quad_per_axis,
        indices=indices,
        nodes=nodes,
        weights=weights,
        eval_table=eval_table,
        axis_nodes=axis_nodes,
        axis_weights=axis_weights,
    )


_BASIS_CACHE: dict[tuple[int, int, int], BasisGrid] = {}


def cached_basis(dim: int, max_degree: int, quad_per_axis: int) -> BasisGrid:
    """Memoized build_basis; BasisGrid is immutable so sharing is safe."""
    key = (dim, max_degree, quad_per_axis)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = build_basis(*key)
    return _BASIS_CACHE[key]


def gram_matrix(basis: BasisGrid) -> np.ndarray:
    return (basis.eval_table * basis.weights) @ basis.eval_table.T


def gram_deviation(basis: BasisGrid) -> float:
    """Max |G - I| over the quadrature Gram matrix; orthonormality check."""
    g = gram_matrix(basis)
    return float(np.max(np.abs(g - np.eye(basis.size))))


def save_basis(basis: BasisGrid, path) -> None:
    """Serialize a basis to a versioned binary cache file."""
    np.savez(
        path,
        version=np.array([BASIS_CACHE_VERSION]),
        shape=np.array([basis.dim, basis.max_degree, basis.quad_per_axis]),
        indices=np.array(basis.indices, dtype=np.int64),
        nodes=basis.nodes,
        weights=basis.weights,
        eval_table=basis.eval_table,
        axis_nodes=basis.axis_nodes,
        axis_weights=basis.axis_weights,
    )


def load_basis(path) -> BasisGrid:
    with np.load(path) as data:
        version = int(data["version"][0])
        if version != BASIS_CACHE_VERSION:
            raise BasisError(f"basis cache version {version} unsupported")
        dim, max_degree, quad = (int(v) for v in data["shape"])
        indices = tuple(tuple(int(i) for i in row) for row in data["indices"])
        return BasisGrid(
            dim=dim,
            max_degree=max_degree,
            quad_per_axis=quad,
            indices=indices,
            nodes=data["nodes"],
            weights=data["weights"],
            eval_table=data["eval_table"],
            axis_nodes=data["axis_nodes"],
            axis_weights=data["axis_weights"],
        )
