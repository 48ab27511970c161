"""Correspondences of measured functors and their relative tensor product.

A :class:`Correspondence` stores the actions of delta functions in
orthonormal coordinates: ``left[x]`` is the operator of delta_x from the
left algebra, ``right[h]`` the operator of delta_h from the right algebra.
Correspondences built from a functor additionally keep their basis of pairs
(u, h) and the weights ``base(u) * weight(h)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .algebra import regular_representation
from .errors import ConsistencyError
from .groupoid import GroupoidFunctor, compose_functors, identity_functor
from .linalg import DEFAULT_TOL, max_abs
from .measure import MeasuredGroupoid, measured_functor_check

__all__ = [
    "Correspondence",
    "build_correspondence",
    "standard_correspondence",
    "inner_product_table",
    "inner_product_valued",
    "saup_inner_product_table",
    "relative_tensor",
    "FusionReport",
    "fusion_intertwiner",
    "UnitLawReport",
    "unit_law_check",
    "find_intertwiner",
    "IntertwinerResult",
]


@dataclass(eq=False)
class Correspondence:
    left_mg: MeasuredGroupoid
    right_mg: MeasuredGroupoid
    left: np.ndarray
    right: np.ndarray
    functor: GroupoidFunctor | None = None
    basis: tuple = ()
    weights: tuple[Fraction, ...] = ()
    # fused correspondences remember how they sit over the algebraic tensor product
    q: np.ndarray | None = field(default=None, repr=False)
    qinv: np.ndarray | None = field(default=None, repr=False)
    form: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.left.shape[-1]

    @property
    def scaling(self) -> np.ndarray:
        return np.sqrt(np.array([float(w) for w in self.weights]))

    def act_left(self, f) -> np.ndarray:
        return np.einsum("x,xab->ab", np.asarray(f, dtype=complex), self.left)

    def act_right(self, g) -> np.ndarray:
        return np.einsum("h,hab->ab", np.asarray(g, dtype=complex), self.right)

    def index(self, u: int, h: int) -> int:
        return self._index[(u, h)]

    @property
    def _index(self):
        return {b: i for i, b in enumerate(self.basis)}

    def __repr__(self):
        return f"<Correspondence dim={self.dim} ({self.left_mg.g.n_arrows} | {self.right_mg.g.n_arrows})>"


def build_correspondence(f: GroupoidFunctor, dom: MeasuredGroupoid, cod: MeasuredGroupoid) -> Correspondence:
    """The space of pairs (u, h) with phi0(u) = tgt(h), with its two actions.

    left:  (pi(f) phi)(u,h) = sum_{y in G^u} w(y) Delta(y)^-1/2 f(y) phi(src y, phi1(y^-1) h)
    right: (rho(g) phi)(u,h) = sum_{l in H^{src h}} lambda(l) g(l^-1) phi(u, h l)
    """
    report = measured_functor_check(f, dom, cod)
    if not report.ok:
        raise ValueError(f"not a measured functor: {report.violations}")
    G, H = dom.g, cod.g
    basis = tuple((u, int(h)) for u in range(G.n_objects) for h in H.t_fiber(f.phi0[u]))
    idx = {b: i for i, b in enumerate(basis)}
    weights = tuple(dom.base[u] * cod.weight[h] for u, h in basis)
    d = len(basis)
    left = np.zeros((G.n_arrows, d, d))
    wG, dG = dom.weight_array, dom.delta_array
    for y in range(G.n_arrows):
        u, s = int(G.tgt[y]), int(G.src[y])
        py = f.phi1[G.inv[y]]
        for h in H.t_fiber(f.phi0[u]):
            left[y, idx[(u, int(h))], idx[(s, int(H.comp[py, h]))]] += wG[y] * dG[y] ** -0.5
    right = np.zeros((H.n_arrows, d, d))
    wH = cod.weight_array
    for z in range(H.n_arrows):
        l = int(H.inv[z])
        for i, (u, h) in enumerate(basis):
            if H.src[h] == H.tgt[l]:
                right[z, i, idx[(u, int(H.comp[h, l]))]] += wH[l]
    scale = np.sqrt(np.array([float(w) for w in weights]))
    norm = scale[None, :, None] / scale[None, None, :]
    return Correspondence(dom, cod, (left * norm).astype(complex), (right * norm).astype(complex),
                          functor=f, basis=basis, weights=weights)


def standard_correspondence(mg: MeasuredGroupoid) -> Correspondence:
    """L^2(G) with the left and right regular representations."""
    rep = regular_representation(mg)
    g = mg.g
    return Correspondence(mg, mg, rep.left_normalized, rep.right_normalized,
                          basis=tuple((int(g.tgt[x]), x) for x in range(g.n_arrows)), weights=mg.nu)


def inner_product_table(c: Correspondence) -> np.ndarray:
    """Raw-coordinate table T[b, b', h] of the middle-algebra valued inner product on delta functions.

    For a correspondence of a functor psi: H -> K,
    <psi1, psi2>(h) = sum_{k in K^{psi0(src h)}} rho(k) conj(psi1(src h, k)) psi2(tgt h, psi1(h) k).
    """
    if c.functor is None:
        raise ValueError("closed-form inner product needs a functor correspondence")
    psi, H, K = c.functor, c.left_mg.g, c.right_mg.g
    idx = c._index
    out = np.zeros((c.dim, c.dim, H.n_arrows))
    rho = c.right_mg.weight_array
    for h in range(H.n_arrows):
        s, t = int(H.src[h]), int(H.tgt[h])
        ph = psi.phi1[h]
        for k in K.t_fiber(psi.phi0[s]):
            out[idx[(s, int(k))], idx[(t, int(K.comp[ph, k]))], h] += rho[k]
    return out


def inner_product_valued(psi1, psi2, c: Correspondence) -> np.ndarray:
    """<psi1, psi2> as an element of the convolution algebra of the left groupoid of ``c``.

    ``psi1`` and ``psi2`` are raw function values on the basis of ``c``.
    """
    t = inner_product_table(c)
    return np.einsum("a,b,abh->h", np.conj(np.asarray(psi1, dtype=complex)), np.asarray(psi2, dtype=complex), t)


def saup_inner_product_table(c: Correspondence) -> np.ndarray:
    """The same inner product for any correspondence, in orthonormal coordinates.

    Pairing against delta_h in L^2(H) isolates one value:
    <psi1, psi2>(h) = Delta(h)^(1/2) (psi1, pi(delta_{h^-1}) psi2) / nu(h).
    """
    mg = c.left_mg
    H = mg.g
    coef = np.sqrt(mg.delta_array) / mg.nu_array
    mats = c.left[H.inv]
    return np.transpose(mats, (1, 2, 0)) * coef[None, None, :]


def relative_tensor(c1: Correspondence, c2: Correspondence, tol: float = DEFAULT_TOL) -> Correspondence:
    """Fusion of c1 (G|H) and c2 (H|K) over the middle algebra.

    The form (a (x) b, a' (x) b')_0 = (a, rho1(<b, b'>) a') is assembled on
    the algebraic tensor product and split by its positive eigenspace.
    """
    if c1.right_mg is not c2.left_mg:
        raise ValueError("correspondences do not share the middle measured groupoid")
    d1, d2 = c1.dim, c2.dim
    ipv = saup_inner_product_table(c2)
    # form[(a, b), (a', b')] = sum_h <b, b'>(h) rho1(delta_h)[a, a']
    form = np.einsum("BCh,hAD->ABDC", ipv, c1.right, optimize=True)
    form = form.reshape(d1 * d2, d1 * d2)
    herm = max_abs(form - form.conj().T)
    scale = max(1.0, max_abs(form))
    if herm > tol * scale * 10:
        raise ConsistencyError(f"fusion form is not Hermitian (residual {herm:.3e})")
    q, qinv, evals = linalg.psd_split(form, tol)
    if evals.size and evals.min() < -tol * scale:
        raise ConsistencyError(f"fusion form is not positive semidefinite (min eigenvalue {evals.min():.3e})")
    e1, e2 = np.eye(d1), np.eye(d2)
    left = np.array([q @ np.kron(a, e2) @ qinv for a in c1.left])
    right = np.array([q @ np.kron(e1, b) @ qinv for b in c2.right])
    return Correspondence(c1.left_mg, c2.right_mg, left, right, q=q, qinv=qinv, form=form)


def _max_over(stack_a, stack_b) -> float:
    return max((max_abs(a - b) for a, b in zip(stack_a, stack_b)), default=0.0)


@dataclass
class FusionReport:
    fused_dim: int
    target_dim: int
    tensor_dim: int
    image_rank: int
    isometry_residual: float
    kernel_residual: float
    unitarity_residual: float
    left_residual: float
    right_residual: float
    tolerance: float
    unitary: np.ndarray = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        residuals = (self.isometry_residual, self.kernel_residual, self.unitarity_residual,
                     self.left_residual, self.right_residual)
        return (self.fused_dim == self.target_dim == self.image_rank
                and all(r < self.tolerance for r in residuals))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("unitary")
        d["passed"] = self.passed
        return d


def fusion_intertwiner(phi: GroupoidFunctor, psi: GroupoidFunctor, mG: MeasuredGroupoid, mH: MeasuredGroupoid,
                       mK: MeasuredGroupoid, tol: float = DEFAULT_TOL) -> FusionReport:
    """Certify L^2(phi) fused with L^2(psi) is isomorphic to L^2(psi . phi).

    U~(a (x) b)(u, k) = sum_{h in H^{phi0(u)}} lambda(h) a(u, h) b(src h, psi1(h^-1) k);
    on delta functions this sends (u,h) (x) (src h, k') to lambda(h) at (u, psi1(h) k').
    """
    c1 = build_correspondence(phi, mG, mH)
    c2 = build_correspondence(psi, mH, mK)
    c3 = build_correspondence(compose_functors(phi, psi), mG, mK)
    fused = relative_tensor(c1, c2, tol)
    H, K = mH.g, mK.g
    i3 = c3._index
    d1, d2, d3 = c1.dim, c2.dim, c3.dim
    u_raw = np.zeros((d3, d1 * d2))
    lam = mH.weight_array
    for a, (u, h) in enumerate(c1.basis):
        s = int(H.src[h])
        ph = psi.phi1[h]
        for b, (v, k) in enumerate(c2.basis):
            if v == s:
                u_raw[i3[(u, int(K.comp[ph, k]))], a * d2 + b] += lam[h]
    s_in = np.kron(c1.scaling, c2.scaling)
    u_on = c3.scaling[:, None] * u_raw / s_in[None, :]
    iso = max_abs(u_on.conj().T @ u_on - fused.form)
    kernel = max_abs(u_on @ (np.eye(d1 * d2) - fused.qinv @ fused.q))
    U = u_on @ fused.qinv
    r = fused.dim
    unit_res = max_abs(U.conj().T @ U - np.eye(r)) if r == d3 else float("inf")
    left_res = max((max_abs(U @ a - b @ U) for a, b in zip(fused.left, c3.left)), default=0.0)
    right_res = max((max_abs(U @ a - b @ U) for a, b in zip(fused.right, c3.right)), default=0.0)
    return FusionReport(r, d3, d1 * d2, linalg.rank(u_on, tol), iso, kernel, unit_res, left_res, right_res, tol, U)


@dataclass
class UnitLawReport:
    dim_identity: int
    dim_standard: int
    weights_match: bool
    left_residual: float
    right_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.weights_match and self.dim_identity == self.dim_standard
                and self.left_residual < self.tolerance and self.right_residual < self.tolerance)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def unit_law_check(mg: MeasuredGroupoid, tol: float = DEFAULT_TOL) -> UnitLawReport:
    """Compare L^2(id) with L^2(G) through the relabeling (tgt h, h) -> h."""
    c = build_correspondence(identity_functor(mg.g), mg, mg)
    std = standard_correspondence(mg)
    n = mg.g.n_arrows
    perm = np.zeros((n, c.dim))
    for i, (u, h) in enumerate(c.basis):
        perm[h, i] = 1
    weights_match = c.dim == n and all(c.weights[i] == mg.nu[h] for i, (u, h) in enumerate(c.basis))
    left = _max_over([perm @ a @ perm.T for a in c.left], std.left)
    right = _max_over([perm @ a @ perm.T for a in c.right], std.right)
    return UnitLawReport(c.dim, n, weights_match, left, right, tol)


@dataclass
class IntertwinerResult:
    unitary: np.ndarray | None
    solution_dim: int
    residual: float
    tolerance: float

    @property
    def found(self) -> bool:
        return self.unitary is not None and self.residual < self.tolerance


def _stacks(c: Correspondence) -> np.ndarray:
    mats = [m for m in c.left] + [m for m in c.right]
    return np.array(mats + [m.conj().T for m in mats])


def find_intertwiner(c1: Correspondence, c2: Correspondence, rng=0, tol: float = DEFAULT_TOL,
                     probes: int = 4) -> IntertwinerResult:
    """Look for a unitary U with U a1 = a2 U for both actions.

    Solves the linear intertwining equations, probes the solution space with
    random combinations until one is invertible, then takes its polar part.
    The actions are *-closed, so the polar part intertwines as well.
    """
    if c1.left_mg is not c2.left_mg or c1.right_mg is not c2.right_mg:
        raise ValueError("correspondences act by different algebras")
    d1, d2 = c1.dim, c2.dim
    if d1 != d2:
        return IntertwinerResult(None, 0, float("inf"), tol)
    s1, s2 = _stacks(c1), _stacks(c2)
    e = np.eye(d1)
    # row-major vec(X A) = (I kron A^T) vec X, vec(A X) = (A kron I) vec X
    system = np.vstack([np.kron(e, a.T) - np.kron(b, e) for a, b in zip(s1, s2)])
    ns = linalg.null_space(system, tol)
    k = ns.shape[1]
    if k == 0:
        return IntertwinerResult(None, 0, float("inf"), tol)
    rng = np.random.default_rng(rng)
    best = None
    for _ in range(probes):
        x = (ns @ (rng.normal(size=k) + 1j * rng.normal(size=k))).reshape(d2, d1)
        s = np.linalg.svd(x, compute_uv=False)
        if s[-1] > tol * s[0] * 1e3:
            U = linalg.polar_unitary(x)
            res = max(max_abs(U @ a - b @ U) for a, b in zip(s1, s2))
            res = max(res, max_abs(U.conj().T @ U - e))
            if best is None or res < best[1]:
                best = (U, res)
            if res < tol:
                break
    if best is None:
        return IntertwinerResult(None, k, float("inf"), tol)
    return IntertwinerResult(best[0], k, best[1], tol)
