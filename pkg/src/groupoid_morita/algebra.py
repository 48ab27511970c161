"""Convolution *-algebra of a finite measured groupoid and its regular representation.

Elements of the algebra are plain 1-d arrays indexed by arrow ids: complex
arrays for numerical work, object arrays of ``Fraction`` for exact work.
Convolution and involution never involve square roots, so they stay exact
on rational input; the modular factors Delta^(+-1/2) only appear in the left
regular representation and in the conjugation J.

Operators on L^2(G) = L^2(G_1, nu) come in two coordinate systems: the raw
one (matrices acting on function values) and the orthonormal one obtained
by the scaling D = diag(sqrt(nu)).  Algebra-level routines
(:func:`generate_algebra`, :func:`commutant`, :func:`wedderburn`) expect
orthonormal coordinates so that the Hilbert-space adjoint is the conjugate
transpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg
from .errors import ConsistencyError
from .linalg import DEFAULT_TOL
from .measure import MeasuredGroupoid

__all__ = [
    "delta",
    "algebra_unit",
    "convolve",
    "involute",
    "MatrixRep",
    "RegularRepresentation",
    "regular_representation",
    "generate_algebra",
    "commutant",
    "center",
    "wedderburn",
    "WedderburnResult",
    "AlgebraSummary",
    "summarize_algebra",
]


def _is_exact(*arrays) -> bool:
    return any(np.asarray(a).dtype == object for a in arrays)


def delta(n: int, x: int, exact: bool = False) -> np.ndarray:
    if exact:
        out = np.array([Fraction(0)] * n, dtype=object)
        out[x] = Fraction(1)
        return out
    out = np.zeros(n, dtype=complex)
    out[x] = 1
    return out


def algebra_unit(mg: MeasuredGroupoid, exact: bool = False) -> np.ndarray:
    """The unit of the convolution algebra: 1/weight on unit arrows, zero elsewhere."""
    g = mg.g
    out = np.array([Fraction(0)] * g.n_arrows, dtype=object)
    for e in g.unit:
        out[e] = 1 / mg.weight[e]
    return out if exact else out.astype(complex)


def convolve(f: np.ndarray, g: np.ndarray, mg: MeasuredGroupoid) -> np.ndarray:
    """(f*g)(x) = sum over y with tgt(y) = src(x) of weight(y) f(xy) g(y^-1)."""
    G = mg.g
    pairs = G.composable_pairs
    x, y, xy = pairs[:, 0], pairs[:, 1], pairs[:, 2]
    if _is_exact(f, g):
        w = np.array(mg.weight, dtype=object)
        out = np.array([Fraction(0)] * G.n_arrows, dtype=object)
        terms = w[y] * np.asarray(f, dtype=object)[xy] * np.asarray(g, dtype=object)[G.inv[y]]
        for i, t in zip(x, terms):
            out[i] += t
        return out
    out = np.zeros(G.n_arrows, dtype=complex)
    np.add.at(out, x, mg.weight_array[y] * np.asarray(f)[xy] * np.asarray(g)[G.inv[y]])
    return out


def involute(f: np.ndarray, mg: MeasuredGroupoid) -> np.ndarray:
    """f*(x) = conj(f(x^-1))."""
    return np.conj(np.asarray(f)[mg.g.inv])


@dataclass(frozen=True, eq=False)
class MatrixRep:
    """An operator on the weighted space L^2(G_1, nu), stored in raw coordinates.

    For ``antilinear`` operators the stored matrix K means ``psi -> K conj(psi)``.
    """

    matrix: np.ndarray
    weights: np.ndarray
    kind: str
    antilinear: bool = False

    @property
    def scaling(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def normalized(self) -> np.ndarray:
        """The same operator in orthonormal coordinates."""
        d = self.scaling
        return d[:, None] * self.matrix / d[None, :]

    def adjoint(self) -> np.ndarray:
        """Adjoint w.r.t. the nu-weighted inner product, in raw coordinates."""
        w = self.weights
        return self.matrix.conj().T * w[None, :] / w[:, None]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi)
        return self.matrix @ (psi.conj() if self.antilinear else psi)


class RegularRepresentation:
    """Left and right regular representations and the conjugation J.

    The generator stacks hold the raw matrices of delta functions:
    ``left_gens[z]`` is the matrix of pi_L(delta_z), ``right_gens[z]`` that
    of pi_R(delta_z).
    """

    def __init__(self, mg: MeasuredGroupoid):
        self.mg = mg

    @cached_property
    def left_gens(self) -> np.ndarray:
        mg, G = self.mg, self.mg.g
        n = G.n_arrows
        out = np.zeros((n, n, n))
        w, d = mg.weight_array, mg.delta_array
        # pi_L(f) psi (x) = sum_y w(y) Delta(xy)^-1/2 f(xy) psi(y^-1)
        for x, y, xy in G.composable_pairs:
            out[xy, x, G.inv[y]] += w[y] * d[xy] ** -0.5
        return out

    @cached_property
    def right_gens(self) -> np.ndarray:
        G = self.mg.g
        n = G.n_arrows
        out = np.zeros((n, n, n))
        w = self.mg.weight_array
        # pi_R(f) psi (x) = (psi * f)(x) = sum_y w(y) psi(xy) f(y^-1)
        for x, y, xy in G.composable_pairs:
            out[G.inv[y], x, xy] += w[y]
        return out

    @cached_property
    def j_matrix(self) -> np.ndarray:
        G, d = self.mg.g, self.mg.delta_array
        k = np.zeros((G.n_arrows, G.n_arrows))
        k[np.arange(G.n_arrows), G.inv] = d ** -0.5
        return k

    @property
    def weights(self) -> np.ndarray:
        return self.mg.nu_array

    @property
    def scaling(self) -> np.ndarray:
        return np.sqrt(self.mg.nu_array)

    def left(self, f) -> MatrixRep:
        return MatrixRep(np.einsum("z,zab->ab", np.asarray(f, dtype=complex), self.left_gens), self.weights, "left")

    def right(self, f) -> MatrixRep:
        return MatrixRep(np.einsum("z,zab->ab", np.asarray(f, dtype=complex), self.right_gens), self.weights, "right")

    @property
    def J(self) -> MatrixRep:
        return MatrixRep(self.j_matrix.astype(complex), self.weights, "J", antilinear=True)

    def _normalize(self, stack):
        d = self.scaling
        return d[None, :, None] * stack / d[None, None, :]

    @cached_property
    def left_normalized(self) -> np.ndarray:
        return self._normalize(self.left_gens).astype(complex)

    @cached_property
    def right_normalized(self) -> np.ndarray:
        return self._normalize(self.right_gens).astype(complex)

    @cached_property
    def j_normalized(self) -> np.ndarray:
        d = self.scaling
        return d[:, None] * self.j_matrix / d[None, :]

    def conjugate_by_j(self, a: np.ndarray) -> np.ndarray:
        """J a J for a linear operator given in orthonormal coordinates."""
        k = self.j_normalized
        return k @ np.conj(a) @ k


def regular_representation(mg: MeasuredGroupoid) -> RegularRepresentation:
    return RegularRepresentation(mg)


# -- finite-dimensional operator algebras --------------------------------------


def _flat(mats) -> np.ndarray:
    mats = np.asarray(mats, dtype=complex)
    return mats.reshape(mats.shape[0], -1)


def generate_algebra(generators, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Hilbert-Schmidt orthonormal basis of the unital *-algebra generated by ``generators``.

    The generators are square matrices in orthonormal coordinates.  Closure
    runs by left multiplication with the (adjoint-closed) generating set,
    which reaches every word.
    """
    gens = np.asarray(generators, dtype=complex)
    if gens.ndim == 2:
        gens = gens[None]
    n = gens.shape[-1]
    gens = np.concatenate([gens, np.conj(np.swapaxes(gens, 1, 2))])
    basis = linalg.row_basis(np.vstack([np.eye(n).reshape(1, -1), _flat(gens)]), tol)
    frontier = basis.reshape(-1, n, n)
    while len(frontier) and len(basis) < n * n:
        cand = np.einsum("gij,kjl->gkil", gens, frontier).reshape(-1, n * n)
        cand = cand - (cand @ basis.conj().T) @ basis
        cand = cand - (cand @ basis.conj().T) @ basis
        norms = np.linalg.norm(cand, axis=1)
        scale = max(1.0, float(np.abs(gens).max()))
        cand = cand[norms > tol * scale * scale]
        if not len(cand):
            break
        new = linalg.row_basis(cand, tol)
        new = new - (new @ basis.conj().T) @ basis
        new = linalg.row_basis(new, tol)
        if not len(new):
            break
        basis = np.vstack([basis, new])
        frontier = new.reshape(-1, n, n)
    return basis.reshape(-1, n, n)


def _commutator_system(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[-1]
    eye = np.eye(n)
    # row-major vec: vec(A X) = (A kron I) vec X, vec(X A) = (I kron A^T) vec X
    return np.vstack([np.kron(a, eye) - np.kron(eye, a.T) for a in mats])


def commutant(mats, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of {X : X A = A X for every A in ``mats``}."""
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim == 2:
        mats = mats[None]
    n = mats.shape[-1]
    ns = linalg.null_space(_commutator_system(mats), tol)
    return ns.T.reshape(-1, n, n)


def center(basis, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the center of the algebra spanned by ``basis``."""
    basis = np.asarray(basis, dtype=complex)
    d = len(basis)
    cols = []
    for j in range(d):
        comm = np.einsum("ab,ibc->iac", basis[j], basis) - np.einsum("iab,bc->iac", basis, basis[j])
        cols.append(comm.reshape(-1))
    coeffs = linalg.null_space(np.array(cols).T, tol)
    z = np.einsum("jk,jab->kab", coeffs, basis)
    return linalg.row_basis(_flat(z), tol).reshape(-1, *basis.shape[1:])


@dataclass(frozen=True)
class WedderburnResult:
    blocks: tuple[int, ...]
    multiplicities: tuple[int, ...]
    center_dim: int
    attempts: int

    @property
    def dimension(self) -> int:
        return sum(b * b for b in self.blocks)


def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] > tol:
            groups.append(np.array(cur))
            cur = []
        cur.append(b)
    groups.append(np.array(cur))
    return groups


def wedderburn(basis, rng: np.random.Generator | int | None = 0, tol: float = DEFAULT_TOL,
               retries: int = 8) -> WedderburnResult:
    """Full-matrix block sizes of a *-closed unital algebra given by a basis.

    A random self-adjoint central element separates the minimal central
    projections; each spectral projection P cuts out a block whose dimension
    dim(P A) is the square of the block size.
    """
    rng = np.random.default_rng(rng)
    basis = np.asarray(basis, dtype=complex)
    n = basis.shape[-1]
    z_basis = center(basis, tol)
    k = len(z_basis)
    for attempt in range(1, retries + 1):
        # complex coefficients: a real central basis would tie conjugate characters
        coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
        z = np.einsum("j,jab->ab", coeffs, z_basis)
        z = (z + z.conj().T) / 2
        evals, vecs = np.linalg.eigh(z)
        spread = max(float(np.abs(evals).max()), 1e-300)
        groups = _cluster(evals, 1e-6 * spread)
        if len(groups) != k:
            continue
        blocks, mults = [], []
        ok = True
        for grp in groups:
            v = vecs[:, grp]
            p = v @ v.conj().T
            dim = linalg.rank(_flat(np.einsum("ab,jbc->jac", p, basis)), tol)
            b = int(round(np.sqrt(dim)))
            if b * b != dim or len(grp) % b:
                ok = False
                break
            blocks.append(b)
            mults.append(len(grp) // b)
        if ok and sum(b * b for b in blocks) == len(basis):
            order = sorted(range(k), key=lambda i: (blocks[i], mults[i]))
            return WedderburnResult(tuple(blocks[i] for i in order), tuple(mults[i] for i in order), k, attempt)
    raise ConsistencyError(f"could not separate the {k} central blocks after {retries} attempts (n={n})")


@dataclass(frozen=True)
class AlgebraSummary:
    dimension: int
    center_dim: int
    commutative: bool
    blocks: tuple[int, ...]
    multiplicities: tuple[int, ...]


def summarize_algebra(mg: MeasuredGroupoid, seed: int = 0, tol: float = DEFAULT_TOL) -> AlgebraSummary:
    """Dimension, center and Wedderburn blocks of W*(G) in its left regular representation."""
    basis = generate_algebra(regular_representation(mg).left_normalized, tol)
    w = wedderburn(basis, seed, tol)
    return AlgebraSummary(len(basis), w.center_dim, w.center_dim == len(basis), w.blocks, w.multiplicities)
