"""Hilbert C*(G)-C*(H) bimodules of bibundles, interior tensor products and Morita witnesses.

A :class:`BimoduleSpace` is stored on a finite basis ``e_0 .. e_{r-1}``:

* ``ip[a, b]`` is the function ``<e_a, e_b>`` on the arrows of H,
* ``lact[x]`` is the matrix of ``delta_x . -`` and ``ract[h]`` that of ``- . delta_h``.

For ``E(M)`` the basis is the delta functions on the carrier.  Tables are
either complex floats or object arrays of ``Fraction`` (exact mode).
Positivity is decided in the left regular representation of C*(H), which is
faithful.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import linalg
from .algebra import algebra_unit, convolve, delta, involute, regular_representation, summarize_algebra
from .bibundle import Bibundle, bibundle_tensor, induced_measure, reverse_bibundle, validate_bibundle
from .errors import ConsistencyError
from .groupoid import FiniteGroupoid, find_group_isomorphism, isotropy_group, orbits
from .linalg import DEFAULT_TOL
from .measure import MeasuredGroupoid, counting_measured

__all__ = [
    "BimoduleSpace",
    "build_bimodule",
    "canonical_bimodule",
    "gram_operator",
    "algebraic_violations",
    "norm_bound_gap",
    "interior_tensor",
    "IntertwinerReport",
    "bimodule_intertwiner",
    "BimoduleUnitary",
    "bimodule_unitary",
    "MoritaVerdict",
    "morita_decide",
    "morita_witness",
    "random_bimodule_element",
]


@dataclass(eq=False)
class BimoduleSpace:
    left_mg: MeasuredGroupoid
    right_mg: MeasuredGroupoid
    ip: np.ndarray
    lact: np.ndarray
    ract: np.ndarray
    labels: tuple[str, ...] = ()
    exact: bool = False

    @property
    def dim(self) -> int:
        return self.ip.shape[0]

    def inner(self, phi, psi) -> np.ndarray:
        """<phi, psi> as a function on the arrows of H (conjugate-linear in phi)."""
        return np.einsum("a,b,abh->h", np.conj(phi), psi, self.ip)

    def act_left(self, f, phi) -> np.ndarray:
        return np.einsum("x,xab,b->a", f, self.lact, phi)

    def act_right(self, phi, g) -> np.ndarray:
        return np.einsum("h,hab,b->a", g, self.ract, phi)

    def left_matrix(self, f) -> np.ndarray:
        return np.einsum("x,xab->ab", f, self.lact)

    def right_matrix(self, g) -> np.ndarray:
        return np.einsum("h,hab->ab", g, self.ract)

    def to_float(self) -> "BimoduleSpace":
        if not self.exact:
            return self
        conv = lambda a: np.vectorize(complex, otypes=[complex])(a) if a.size else a.astype(complex)
        return BimoduleSpace(self.left_mg, self.right_mg, conv(self.ip), conv(self.lact), conv(self.ract),
                             self.labels, exact=False)

    def __repr__(self):
        return f"<BimoduleSpace dim={self.dim} {self.left_mg.g!r} | {self.right_mg.g!r}>"


def _zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex)


def build_bimodule(b: Bibundle, mG: MeasuredGroupoid, mH: MeasuredGroupoid, exact: bool = False,
                   check: bool = True, tol: float = DEFAULT_TOL) -> BimoduleSpace:
    """E(M) on the delta basis of the carrier.

    <d_a, d_b>(h) = mu(a) when a.h = b;  d_x . d_m = weight(x) d_{x.m};
    d_m . d_h = weight(h^-1) d_{m.h}.
    """
    if b.left is not mG.g or b.right is not mH.g:
        raise ValueError("measured groupoids do not match the bibundle")
    mu = induced_measure(b, mG.haar).mu
    val = (lambda q: q) if exact else float
    G, H, r = b.left, b.right, b.size
    ip = _zeros((r, r, H.n_arrows), exact)
    lact = _zeros((G.n_arrows, r, r), exact)
    ract = _zeros((H.n_arrows, r, r), exact)
    for m in range(r):
        for h in H.t_fiber(b.sigma[m]):
            mh = b.ract[m, h]
            ip[m, mh, h] += val(mu[m])
            ract[h, mh, m] += val(mH.weight[H.inv[h]])
        for x in G.s_fiber(b.tau[m]):
            lact[x, b.lact[x, m], m] += val(mG.weight[x])
    e = BimoduleSpace(mG, mH, ip, lact, ract, b.carrier, exact)
    if check:
        _assert_positive(e, tol)
    return e


def canonical_bimodule(mg: MeasuredGroupoid, exact: bool = False) -> BimoduleSpace:
    """C*(G) over itself: <a, b> = a* * b, left and right multiplication.

    Built from the convolution product alone, independently of any bibundle.
    """
    n = mg.g.n_arrows
    deltas = [delta(n, z, exact=exact) for z in range(n)]
    if not exact:
        deltas = [d.astype(complex) for d in deltas]
    ip = _zeros((n, n, n), exact)
    lact = _zeros((n, n, n), exact)
    ract = _zeros((n, n, n), exact)
    for a in range(n):
        star = involute(deltas[a], mg)
        for b in range(n):
            ip[a, b] = convolve(star, deltas[b], mg)
    for z in range(n):
        for b in range(n):
            lact[z, :, b] = convolve(deltas[z], deltas[b], mg)
            ract[z, :, b] = convolve(deltas[b], deltas[z], mg)
    return BimoduleSpace(mg, mg, ip, lact, ract, mg.g.arrows, exact)


# -- positivity -------------------------------------------------------------------


def _pi(mg: MeasuredGroupoid):
    return regular_representation(mg).left_normalized


def gram_operator(e: BimoduleSpace) -> np.ndarray:
    """The block matrix [pi(<e_a, e_b>)] with pi the left regular representation of C*(H)."""
    f = e.to_float()
    pi = _pi(e.right_mg)
    blocks = np.einsum("abh,hij->aibj", f.ip, pi)
    r, n = f.dim, pi.shape[1]
    g = blocks.reshape(r * n, r * n)
    return (g + g.conj().T) / 2


def _min_eig(h: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(h).min()) if h.size else 0.0


def _assert_positive(e: BimoduleSpace, tol: float):
    g = gram_operator(e)
    lo = _min_eig(g)
    if lo < -tol * max(1.0, np.abs(g).max()):
        raise ConsistencyError(f"algebra-valued inner product is not positive (min eigenvalue {lo:.3e})")


def norm_bound_gap(e: BimoduleSpace, f: np.ndarray, phi: np.ndarray) -> float:
    """Minimum eigenvalue of pi(||f||^2 <phi, phi> - <f phi, f phi>), relative to the first term.

    ``||f||`` is the operator norm of f in the left regular representation
    of C*(G).  The value is divided by max(1, ||pi(||f||^2 <phi, phi>)||),
    so the bound holds iff the result is >= -eps.
    """
    e = e.to_float()
    pi_g, pi_h = _pi(e.left_mg), _pi(e.right_mg)
    norm = np.linalg.norm(np.einsum("x,xij->ij", f, pi_g), 2)
    fphi = e.act_left(f, phi)
    bound = np.einsum("h,hij->ij", norm ** 2 * e.inner(phi, phi), pi_h)
    m = bound - np.einsum("h,hij->ij", e.inner(fphi, fphi), pi_h)
    return _min_eig((m + m.conj().T) / 2) / max(1.0, np.linalg.norm(bound, 2))


def algebraic_violations(e: BimoduleSpace, tol: float = DEFAULT_TOL) -> dict:
    """Residuals of the pre-Hilbert bimodule identities on basis elements.

    Keys: ``hermitian`` (<a,b>* = <b,a>), ``right_linear`` (<a, b.h> = <a,b>*h),
    ``left_adjoint`` (<a, x.b> = <x*.a, b>), ``left_hom``, ``right_hom``
    (the actions respect convolution) and ``unit`` (units act as identity).
    In exact mode the values are counts of failing entries, otherwise max
    residuals.
    """
    G, H = e.left_mg.g, e.right_mg.g
    exact = e.exact
    out = {}

    def resid(a, b):
        if exact:
            return int(np.sum(a != b))
        return linalg.max_abs(np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex))

    ip = e.ip
    conj = (lambda a: a) if exact else np.conj
    # <a,b>*(h) = conj <a,b>(h^-1)
    star = conj(ip[:, :, H.inv])
    out["hermitian"] = resid(star, ip.transpose(1, 0, 2))
    nh = H.n_arrows
    lhs = np.einsum("hcb,acg->abhg", e.ract, ip) if not exact else _obj_einsum("hcb,acg->abhg", e.ract, ip)
    rhs = _zeros((e.dim, e.dim, nh, nh), exact)
    for a in range(e.dim):
        for b in range(e.dim):
            for h in range(nh):
                rhs[a, b, h] = convolve(ip[a, b], delta(nh, h, exact=exact), e.right_mg)
    out["right_linear"] = resid(lhs, rhs)
    # <a, x.b> against <x^-1 . a, b>
    l1 = _einsum(exact, "xcb,acg->xabg", e.lact, ip)
    l2 = _einsum(exact, "xca,cbg->xabg", conj(e.lact[G.inv]), ip)
    out["left_adjoint"] = resid(l1, l2)
    prod_l = _einsum(exact, "xab,ybc->xyac", e.lact, e.lact)
    prod_r = _einsum(exact, "hab,kbc->khac", e.ract, e.ract)
    exp_l = _zeros(prod_l.shape, exact)
    exp_r = _zeros(prod_r.shape, exact)
    val = (lambda q: q) if exact else float
    for x in range(G.n_arrows):
        for y in range(G.n_arrows):
            c = convolve(delta(G.n_arrows, x, exact), delta(G.n_arrows, y, exact), e.left_mg)
            exp_l[x, y] = _einsum(exact, "z,zab->ab", c, e.lact)
    for h in range(H.n_arrows):
        for k in range(H.n_arrows):
            c = convolve(delta(nh, h, exact), delta(nh, k, exact), e.right_mg)
            exp_r[h, k] = _einsum(exact, "z,zab->ab", c, e.ract)
    out["left_hom"] = resid(prod_l, exp_l)
    out["right_hom"] = resid(prod_r, exp_r)
    ident = _zeros((e.dim, e.dim), exact)
    for i in range(e.dim):
        ident[i, i] += val(Fraction(1))
    out["unit_left"] = resid(_einsum(exact, "z,zab->ab", algebra_unit(e.left_mg, exact), e.lact), ident)
    out["unit_right"] = resid(_einsum(exact, "z,zab->ab", algebra_unit(e.right_mg, exact), e.ract), ident)
    return out


def _obj_einsum(spec, *ops):
    return np.einsum(spec, *ops, dtype=object, optimize=False)


def _einsum(exact, spec, *ops):
    return _obj_einsum(spec, *ops) if exact else np.einsum(spec, *ops)


def random_bimodule_element(e: BimoduleSpace, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=e.dim) + 1j * rng.normal(size=e.dim)


# -- interior tensor product ---------------------------------------------------------


def _smax(m) -> float:
    m = sparse.csr_matrix(m)
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def _tensor_form(e1: BimoduleSpace, e2: BimoduleSpace) -> list:
    """Slices T_k[(a,b), (a',b')] = <b, <a,a'> . b'>(k) as sparse matrices, row-major in (a, b).

    T_k = sum_h <., .>_1(h) (x) (<., .>_2(k) L_2(h)) with L_2(h) the action of delta_h.
    """
    f1, f2 = e1.to_float(), e2.to_float()
    n_h, n_k = f1.ip.shape[2], f2.ip.shape[2]
    ip1 = [sparse.csr_matrix(f1.ip[:, :, h]) for h in range(n_h)]
    out = []
    for k in range(n_k):
        t = sparse.csr_matrix((f1.dim * f2.dim,) * 2, dtype=complex)
        for h in range(n_h):
            if ip1[h].nnz:
                t = t + sparse.kron(ip1[h], sparse.csr_matrix(f2.ip[:, :, k] @ f2.lact[h]), format="csr")
        out.append(t)
    return out


def _form_scale(form: list) -> float:
    return max(1.0, max((_smax(f) for f in form), default=0.0))


def _blockwise_kernel(form: list, tol: float):
    """Split the form along the connected blocks of its support.

    Yields (indices, kernel columns) per block, the columns spanning
    {t : <s, t> = 0 for all s} inside the block.
    """
    r = form[0].shape[0]
    scale = _form_scale(form)
    pattern = sparse.csr_matrix((r, r))
    for f in form:
        pattern = pattern + abs(f)
    n_blocks, label = connected_components(pattern, directed=False)
    for c in range(n_blocks):
        block = np.flatnonzero(label == c)
        rows = np.vstack([f[block][:, block].toarray() for f in form]) / scale
        yield block, linalg.null_space(rows, tol)


def interior_tensor(e1: BimoduleSpace, e2: BimoduleSpace, tol: float = DEFAULT_TOL) -> BimoduleSpace:
    """E1 (x)_H E2: the algebraic tensor product modulo the null vectors of its K-valued form."""
    if e1.right_mg.g is not e2.left_mg.g:
        raise ValueError("bimodules do not share the middle algebra")
    f1, f2 = e1.to_float(), e2.to_float()
    form = _tensor_form(f1, f2)
    r = form[0].shape[0]
    comp_cols, ker_cols = [], []
    for block, ker in _blockwise_kernel(form, tol):
        c = linalg.null_space(ker.conj().T, tol) if ker.shape[1] else np.eye(len(block), dtype=complex)
        comp_cols.append((block, c))
        ker_cols.append((block, ker))
    comp, ker = _embed(comp_cols, r), _embed(ker_cols, r)
    comp_h = comp.conj().T
    ip = np.stack([(comp_h @ f @ comp).toarray() for f in form], axis=2)
    i1, i2 = sparse.identity(f1.dim, format="csr"), sparse.identity(f2.dim, format="csr")
    left_ops = [sparse.kron(m, i2, format="csr") for m in f1.lact]
    right_ops = [sparse.kron(i1, m, format="csr") for m in f2.ract]
    lact = np.stack([(comp_h @ a @ comp).toarray() for a in left_ops])
    ract = np.stack([(comp_h @ a @ comp).toarray() for a in right_ops])
    labels = tuple(f"q{i}" for i in range(comp.shape[1]))
    e = BimoduleSpace(f1.left_mg, f2.right_mg, ip, lact, ract, labels)
    # the actions and the balancing relation must preserve the null space
    if ker.shape[1]:
        for a in left_ops + right_ops:
            if _smax(comp_h @ a @ ker) > tol * max(1.0, _smax(a)) * 1e3:
                raise ConsistencyError("an action does not preserve the null space of the tensor form")
    _assert_positive(e, tol)
    return e


def _embed(blocks, r: int):
    """Stack per-block column sets into one sparse r x n matrix."""
    rows, cols, vals, n = [], [], [], 0
    for block, m in blocks:
        i, j = np.nonzero(m)
        rows.append(block[i])
        cols.append(j + n)
        vals.append(m[i, j])
        n += m.shape[1]
    if not n:
        return sparse.csr_matrix((r, 0), dtype=complex)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, n))


# -- the fusion map for bibundles -------------------------------------------------------


@dataclass
class IntertwinerReport:
    """Certificates that U~ induces E(M) (x)_H E(N) = E(M * N).

    Residuals are ``0.0`` and ``exact`` is set when checked in rationals.
    """

    fused_dim: int
    tensor_dim: int
    orbit_consistent: bool
    isometry: float
    balanced: float
    left: float
    right: float
    image_rank: int
    kernel: float | None
    tolerance: float
    exact: bool
    matrix: np.ndarray | None = field(default=None, repr=False)
    tensor: Bibundle | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        res = [self.isometry, self.balanced, self.left, self.right]
        if self.kernel is not None:
            res.append(self.kernel)
        return (self.orbit_consistent and self.image_rank == self.fused_dim
                and all(r <= self.tolerance for r in res))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("fused_dim", "tensor_dim", "orbit_consistent", "isometry", "balanced",
                                            "left", "right", "image_rank", "kernel", "tolerance", "exact")}
        d["passed"] = self.passed
        return d


def _fusion_values(b1: Bibundle, b2: Bibundle, wH) -> tuple[dict, Bibundle, dict]:
    """U~(d_a (x) d_b) evaluated at every fiber-product pair (m, n).

    The value is the sum of weight(h) over h in H^{sigma(m)} with m.h = a and
    h^-1.n = b.  Returns {(m, n): {(a, b): value}}.
    """
    H = b1.right
    tensor, orbit_of = bibundle_tensor(b1, b2)
    values = {}
    for m, n in orbit_of:
        row = defaultdict(Fraction)
        for h in H.t_fiber(b1.sigma[m]):
            row[(int(b1.ract[m, h]), int(b2.lact[H.inv[h], n]))] += wH[h]
        values[(m, n)] = dict(row)
    return values, tensor, orbit_of


def _orbit_rows(values, orbit_of, n_orbits):
    rows: list[dict | None] = [None] * n_orbits
    consistent = True
    for pair, o in orbit_of.items():
        if rows[o] is None:
            rows[o] = values[pair]
        elif rows[o] != values[pair]:
            consistent = False
    return rows, consistent


def bimodule_intertwiner(b1: Bibundle, b2: Bibundle, mG: MeasuredGroupoid, mH: MeasuredGroupoid,
                         mK: MeasuredGroupoid, exact: bool = False, tol: float = DEFAULT_TOL) -> IntertwinerReport:
    """Certify that U~(phi (x) psi)[m, n] = sum_h weight(h) phi(m.h) psi(h^-1.n) is a unitary bimodule map.

    Two independent routes: ``exact=True`` evaluates every identity on
    delta functions in rationals using sparse sums over the bibundles;
    otherwise float tables of E(M), E(N), E(M * N) and the interior tensor
    form (held as sparse slices) are compared, and the kernel of the form
    is computed block by block and shown to be annihilated.
    """
    for b in (b1, b2):
        if validate_bibundle(b):
            raise ValueError(f"bibundle {b.name or ''} is not left principal")
    values, tensor, orbit_of = _fusion_values(b1, b2, mH.weight)
    rows, consistent = _orbit_rows(values, orbit_of, tensor.size)
    r1, r2 = b1.size, b2.size
    if exact:
        return _exact_certificate(b1, b2, tensor, rows, consistent, mG, mH, mK, tol)
    u = np.zeros((tensor.size, r1 * r2), dtype=complex)
    for o, row in enumerate(rows):
        for (a, b), v in row.items():
            u[o, a * r2 + b] = float(v)
    e1, e2 = build_bimodule(b1, mG, mH), build_bimodule(b2, mH, mK)
    e12 = build_bimodule(tensor, mG, mK)
    su = sparse.csr_matrix(u)
    form = _tensor_form(e1, e2)
    scale = _form_scale(form)
    pulled = [su.conj().T @ sparse.csr_matrix(e12.ip[:, :, k]) @ su for k in range(len(form))]
    iso = max((_smax(p - f) for p, f in zip(pulled, form)), default=0.0) / scale
    i1, i2 = sparse.identity(r1, format="csr"), sparse.identity(r2, format="csr")
    bal = max((_smax(su @ sparse.kron(m, i2) - su @ sparse.kron(i1, n)) for m, n in zip(e1.ract, e2.lact)),
              default=0.0)
    left = max((_smax(su @ sparse.kron(m, i2) - sparse.csr_matrix(l12) @ su)
                for m, l12 in zip(e1.lact, e12.lact)), default=0.0)
    right = max((_smax(su @ sparse.kron(i1, m) - sparse.csr_matrix(r12) @ su)
                 for m, r12 in zip(e2.ract, e12.ract)), default=0.0)
    kern = 0.0
    for block, ker in _blockwise_kernel(form, tol):
        if ker.shape[1]:
            kern = max(kern, linalg.max_abs(u[:, block] @ ker))
    return IntertwinerReport(tensor.size, r1 * r2, consistent, iso, bal, left, right,
                             linalg.rank(u, tol), kern, tol, False, u, tensor)


def _exact_certificate(b1, b2, tensor, rows, consistent, mG, mH, mK, tol):
    H, K = b1.right, b2.right
    mu1 = induced_measure(b1, mG.haar).mu
    mu2 = induced_measure(b2, mH.haar).mu
    mu12 = induced_measure(tensor, mG.haar).mu
    wG, wH, wK = mG.weight, mH.weight, mK.weight
    r1, r2 = b1.size, b2.size
    # column view: (a, b) -> {orbit: value}
    cols = defaultdict(dict)
    for o, row in enumerate(rows):
        for ab, v in row.items():
            cols[ab][o] = cols[ab].get(o, Fraction(0)) + v
    nonzero = {ab: c for ab, c in cols.items() if any(c.values())}

    def ip12(o1, o2):
        """<d_o1, d_o2> in E(M * N) as a sparse function on K."""
        return {int(k): mu12[o1] for k in K.t_fiber(tensor.sigma[o1]) if tensor.ract[o1, k] == o2}

    def ip_n(bb, vec):
        """<d_bb, vec> in E(N) for a sparse vec on the carrier of N."""
        out = defaultdict(Fraction)
        for k in K.t_fiber(b2.sigma[bb]):
            c = vec.get(int(b2.ract[bb, k]))
            if c:
                out[int(k)] += mu2[bb] * c
        return out

    def tensor_form(a, b, a2, b2_):
        # <a, a2> = sum_{h : a.h = a2} mu1(a) delta_h; delta_h . d_b2 = weight(h) d_{h.b2}
        vec = defaultdict(Fraction)
        for h in H.t_fiber(b1.sigma[a]):
            if b1.ract[a, h] == a2 and b2.tau[b2_] == H.src[h]:
                hn = int(b2.lact[h, b2_])
                vec[hn] += mu1[a] * wH[h]
        return {k: v for k, v in ip_n(b, vec).items() if v}

    iso_fail = 0
    pairs = [(a, b) for a in range(r1) for b in range(r2)]
    for s in pairs:
        us = nonzero.get(s, {})
        for t in pairs:
            ut = nonzero.get(t, {})
            lhs = defaultdict(Fraction)
            for o1, c1 in us.items():
                for o2, c2 in ut.items():
                    for k, v in ip12(o1, o2).items():
                        lhs[k] += c1 * c2 * v
            lhs = {k: v for k, v in lhs.items() if v}
            if lhs != tensor_form(s[0], s[1], t[0], t[1]):
                iso_fail += 1

    def image(vec):
        out = defaultdict(Fraction)
        for ab, c in vec.items():
            for o, v in cols.get(ab, {}).items():
                out[o] += c * v
        return {o: v for o, v in out.items() if v}

    bal_fail = left_fail = right_fail = 0
    G = b1.left
    for a, b in pairs:
        # balanced: (d_a . d_h) (x) d_b  vs  d_a (x) (d_h . d_b)
        for h in range(H.n_arrows):
            lhs = image({(int(b1.ract[a, h]), b): wH[H.inv[h]]}) if H.tgt[h] == b1.sigma[a] else {}
            rhs = image({(a, int(b2.lact[h, b])): wH[h]}) if H.src[h] == b2.tau[b] else {}
            bal_fail += lhs != rhs
        src_img = image({(a, b): Fraction(1)})
        for x in G.s_fiber(b1.tau[a]):
            lhs = image({(int(b1.lact[x, a]), b): wG[x]})
            rhs = defaultdict(Fraction)
            for o, v in src_img.items():
                rhs[int(tensor.lact[x, o])] += wG[x] * v
            left_fail += lhs != {o: v for o, v in rhs.items() if v}
        for k in K.t_fiber(b2.sigma[b]):
            lhs = image({(a, int(b2.ract[b, k])): wK[K.inv[k]]})
            rhs = defaultdict(Fraction)
            for o, v in src_img.items():
                rhs[int(tensor.ract[o, k])] += wK[K.inv[k]] * v
            right_fail += lhs != {o: v for o, v in rhs.items() if v}
    hit = {o for c in nonzero.values() for o, v in c.items() if v}
    # columns are supported on single orbits, so the rank is the number of orbits hit
    single = all(len([v for v in c.values() if v]) <= 1 for c in nonzero.values())
    rank = len(hit) if single else linalg.rational_rank(
        [[cols.get(ab, {}).get(o, Fraction(0)) for ab in pairs] for o in range(tensor.size)])
    return IntertwinerReport(tensor.size, r1 * r2, consistent, float(iso_fail), float(bal_fail),
                             float(left_fail), float(right_fail), rank, None, 0.0, True, None, tensor)


# -- bimodule isomorphism ----------------------------------------------------------------


@dataclass
class BimoduleUnitary:
    """A bimodule map W: E1 -> E2 preserving the algebra-valued inner products."""

    unitary: np.ndarray | None
    solution_dim: int
    inner_residual: float
    action_residual: float
    tolerance: float

    @property
    def found(self) -> bool:
        return (self.unitary is not None and self.inner_residual <= self.tolerance
                and self.action_residual <= self.tolerance)


def _scalar_gram(e: BimoduleSpace) -> np.ndarray:
    """(s, t) = tr pi(<s, t>): a positive definite scalar product in which module adjoints are matrix adjoints."""
    tr = np.einsum("hii->h", _pi(e.right_mg))
    g = np.einsum("abh,h->ab", e.ip, tr)
    return (g + g.conj().T) / 2


def _intertwiner_space(e1: BimoduleSpace, e2: BimoduleSpace, tol: float) -> np.ndarray:
    d1, d2 = e1.dim, e2.dim
    eqs = []
    # U A1 - A2 U = 0 with row-major vec(U): vec(U A) = (I (x) A^T) vec U, vec(A U) = (A (x) I) vec U
    for a1, a2 in list(zip(e1.lact, e2.lact)) + list(zip(e1.ract, e2.ract)):
        eqs.append(np.kron(np.eye(d2), a1.T) - np.kron(a2, np.eye(d1)))
    if not eqs:
        return np.eye(d1 * d2, dtype=complex).T.reshape(-1, d2, d1)
    sol = linalg.null_space(np.vstack(eqs), tol)
    return sol.T.reshape(-1, d2, d1)


def bimodule_unitary(e1: BimoduleSpace, e2: BimoduleSpace, rng=0, tol: float = DEFAULT_TOL,
                     probes: int = 4) -> BimoduleUnitary:
    """Search for a unitary bimodule isomorphism E1 -> E2.

    A generic solution U of the intertwining equations is invertible when an
    isomorphism exists; W = U (U^dag U)^{-1/2} is then unitary for the
    algebra-valued inner products, where the module adjoint is taken in the
    scalar product tr pi(<., .>).
    """
    e1, e2 = e1.to_float(), e2.to_float()
    if e1.left_mg.g is not e2.left_mg.g or e1.right_mg.g is not e2.right_mg.g:
        raise ValueError("bimodules live over different algebras")
    rng = np.random.default_rng(rng)
    if e1.dim != e2.dim:
        return BimoduleUnitary(None, 0, np.inf, np.inf, tol)
    space = _intertwiner_space(e1, e2, tol)
    if not len(space):
        return BimoduleUnitary(None, 0, np.inf, np.inf, tol)
    g1, g2 = _scalar_gram(e1), _scalar_gram(e2)
    ev1, v1 = np.linalg.eigh(g1)
    if ev1.min() <= 0:
        raise ConsistencyError("inner product is degenerate on the given basis")
    g1_half = v1 @ np.diag(np.sqrt(ev1)) @ v1.conj().T
    g1_ihalf = v1 @ np.diag(1 / np.sqrt(ev1)) @ v1.conj().T
    best = None
    for _ in range(probes):
        c = rng.normal(size=len(space)) + 1j * rng.normal(size=len(space))
        u = np.einsum("s,sij->ij", c, space)
        if linalg.rank(u, tol) < e1.dim:
            continue
        # module adjoint: U^dag = G1^-1 U^H G2; P = U^dag U is positive for G1
        p = np.linalg.solve(g1, u.conj().T @ g2 @ u)
        ph = g1_half @ p @ g1_ihalf
        ph = (ph + ph.conj().T) / 2
        ew, ev = np.linalg.eigh(ph)
        if ew.min() <= 0:
            continue
        p_ihalf = g1_ihalf @ (ev @ np.diag(ew ** -0.5) @ ev.conj().T) @ g1_half
        w = u @ p_ihalf
        pulled = np.einsum("ia,ijk,jb->abk", w.conj(), e2.ip, w)
        scale = max(1.0, linalg.max_abs(e1.ip))
        inner = linalg.max_abs(pulled - e1.ip) / scale
        act = max(max((linalg.max_abs(w @ a1 - a2 @ w) for a1, a2 in zip(e1.lact, e2.lact)), default=0.0),
                  max((linalg.max_abs(w @ a1 - a2 @ w) for a1, a2 in zip(e1.ract, e2.ract)), default=0.0))
        res = BimoduleUnitary(w, len(space), inner, act, tol)
        if res.found:
            return res
        if best is None or inner + act < best.inner_residual + best.action_residual:
            best = res
    return best or BimoduleUnitary(None, len(space), np.inf, np.inf, tol)


# -- Morita equivalence of finite groupoids ----------------------------------------------------


@dataclass
class MoritaVerdict:
    equivalent: bool
    witness: Bibundle | None
    obstruction: str | None
    matching: tuple = ()
    blocks: tuple = ()

    def to_dict(self) -> dict:
        out = {"equivalent": self.equivalent, "obstruction": self.obstruction,
               "matching": [list(m) for m in self.matching], "block_counts": list(self.blocks)}
        if self.witness is not None:
            w = self.witness
            out["witness"] = {"carrier": list(w.carrier),
                              "tau": [w.left.objects[u] for u in w.tau],
                              "sigma": [w.right.objects[v] for v in w.sigma]}
        return out


def _orbit_keys(g: FiniteGroupoid):
    out = []
    for orb in orbits(g):
        table, _ = isotropy_group(g, orb.base)
        out.append((len(orb.members), table.order, g.objects[orb.base], orb, table))
    out.sort(key=lambda t: t[:3])
    return out


def morita_witness(g: FiniteGroupoid, h: FiniteGroupoid, matching) -> Bibundle:
    """The G-H bibundle of pairs (x, y) with src x = u0, src y = v0, modulo (x theta(k), y k).

    ``matching`` lists ``(u0, v0, theta)`` with theta a tuple mapping the
    isotropy arrows of v0 (in :func:`isotropy_group` order) to those of u0.
    tau[x, y] = tgt x, sigma[x, y] = tgt y; z.[x, y] = [z x, y] and
    [x, y].k = [x, k^-1 y].
    """
    classes: dict = {}
    reps = []
    for u0, v0, theta in matching:
        _, iso_h = isotropy_group(h, v0)
        _, iso_g = isotropy_group(g, u0)
        th = {iso_h[i]: iso_g[theta[i]] for i in range(len(iso_h))}
        for x in g.s_fiber(u0):
            for y in h.s_fiber(v0):
                key = (int(x), int(y))
                if key in classes:
                    continue
                members = [(int(g.comp[x, th[k]]), int(h.comp[y, k])) for k in iso_h]
                rep = min(members)
                for m in members:
                    classes[m] = rep
                reps.append(rep)
    reps = sorted(set(reps))
    idx = {r: i for i, r in enumerate(reps)}
    cls = {m: idx[r] for m, r in classes.items()}
    n = len(reps)
    lact = -np.ones((g.n_arrows, n), dtype=np.int64)
    ract = -np.ones((n, h.n_arrows), dtype=np.int64)
    for (x, y), i in cls.items():
        for z in g.s_fiber(g.tgt[x]):
            lact[z, i] = cls[(int(g.comp[z, x]), y)]
        for k in h.t_fiber(h.tgt[y]):
            ract[i, k] = cls[(x, int(h.comp[h.inv[k], y]))]
    return Bibundle(g, h, tuple(f"[{g.arrows[x]},{h.arrows[y]}]" for x, y in reps),
                    [g.tgt[x] for x, _ in reps], [h.tgt[y] for _, y in reps], lact, ract,
                    name=f"W({g.name},{h.name})")


def morita_decide(g: FiniteGroupoid, h: FiniteGroupoid, cross_check: bool = True, seed: int = 0,
                  tol: float = DEFAULT_TOL) -> MoritaVerdict:
    """Decide Morita equivalence by matching orbits with isomorphic isotropy groups.

    Orbits are sorted by (size, isotropy order, basepoint label) and matched
    greedily, which is exact because isotropy isomorphism is an equivalence
    relation.  A positive verdict carries a witness checked to be principal
    in both directions.
    """
    kg, kh = _orbit_keys(g), _orbit_keys(h)
    blocks = ()
    if cross_check:
        blocks = tuple(len(summarize_algebra(counting_measured(x), seed, tol).blocks) for x in (g, h))
    obstruction = None
    matching, labels = [], []
    if len(kg) != len(kh):
        obstruction = f"orbit count mismatch: {len(kg)} vs {len(kh)}"
    else:
        free = list(range(len(kh)))
        for _, order, label, orb, table in kg:
            hit = None
            for j in free:
                theta = find_group_isomorphism(kh[j][4], table)
                if theta is not None:
                    hit = (j, theta)
                    break
            if hit is None:
                obstruction = f"isotropy mismatch: the group of order {order} at {label} has no isomorphic partner"
                break
            j, theta = hit
            free.remove(j)
            matching.append((orb.base, kh[j][3].base, theta))
            labels.append((label, kh[j][2]))
    if obstruction is not None:
        if cross_check and blocks[0] != blocks[1]:
            obstruction += f"; block counts {blocks[0]} vs {blocks[1]}"
        return MoritaVerdict(False, None, obstruction, (), blocks)
    w = morita_witness(g, h, matching)
    if validate_bibundle(w) or validate_bibundle(reverse_bibundle(w)):
        raise ConsistencyError("constructed Morita witness is not biprincipal")
    if cross_check and blocks[0] != blocks[1]:
        raise ConsistencyError(f"Morita equivalent groupoids with block counts {blocks[0]} vs {blocks[1]}")
    return MoritaVerdict(True, w, None, tuple(labels), blocks)
