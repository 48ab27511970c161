"""Finite G-H bibundles, their tensor product and isomorphism search.

A finite set is a 0-dimensional manifold, so "surjective submersion" reads
as "surjective", properness of the right action holds automatically and
"diffeomorphism" means bijection.

Action tables use ``-1`` for undefined entries: ``lact[x, m]`` is defined iff
``src(x) == tau(m)``; ``ract[m, h]`` iff ``tgt(h) == sigma(m)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConsistencyError, StructureError, Violation
from .groupoid import FiniteGroupoid, GroupoidFunctor
from .measure import HaarSystem

__all__ = [
    "Bibundle",
    "validate_bibundle",
    "is_left_principal",
    "pairing_is_bijective",
    "canonical_bibundle",
    "bibundle_from_functor",
    "reverse_bibundle",
    "induced_measure",
    "InducedMeasureSystem",
    "bibundle_tensor",
    "bibundle_isomorphic",
]


@dataclass(frozen=True, eq=False)
class Bibundle:
    left: FiniteGroupoid
    right: FiniteGroupoid
    carrier: tuple[str, ...]
    tau: np.ndarray
    sigma: np.ndarray
    lact: np.ndarray
    ract: np.ndarray
    name: str = ""

    def __post_init__(self):
        n = len(self.carrier)
        if n == 0:
            raise StructureError("bibundle carrier is empty")
        for attr, shape, bound in (("tau", (n,), self.left.n_objects), ("sigma", (n,), self.right.n_objects),
                                   ("lact", (self.left.n_arrows, n), n), ("ract", (n, self.right.n_arrows), n)):
            arr = np.asarray(getattr(self, attr), dtype=np.int64)
            if arr.shape != shape:
                raise StructureError(f"bibundle table {attr} has shape {arr.shape}, expected {shape}")
            lo = -1 if attr in ("lact", "ract") else 0
            bad = arr[(arr < lo) | (arr >= bound)]
            if bad.size:
                raise StructureError(f"bibundle table {attr} refers to unknown id {int(bad[0])}")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def size(self) -> int:
        return len(self.carrier)

    def sigma_fiber(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.sigma == r)

    def __repr__(self):
        return f"<Bibundle {self.name or ''} |M|={self.size} over {self.left!r} | {self.right!r}>"


def _action_violations(b: Bibundle) -> list[Violation]:
    G, H, M = b.left, b.right, b.carrier
    out = []
    for x in range(G.n_arrows):
        for m in range(b.size):
            xm = int(b.lact[x, m])
            if (xm >= 0) != (G.src[x] == b.tau[m]):
                out.append(Violation("left action domain", (G.arrows[x], M[m])))
            elif xm >= 0 and (b.tau[xm] != G.tgt[x] or b.sigma[xm] != b.sigma[m]):
                out.append(Violation("left action anchors", (G.arrows[x], M[m])))
    for m in range(b.size):
        for h in range(H.n_arrows):
            mh = int(b.ract[m, h])
            if (mh >= 0) != (H.tgt[h] == b.sigma[m]):
                out.append(Violation("right action domain", (M[m], H.arrows[h])))
            elif mh >= 0 and (b.sigma[mh] != H.src[h] or b.tau[mh] != b.tau[m]):
                out.append(Violation("right action anchors", (M[m], H.arrows[h])))
    if out:
        return out
    for m in range(b.size):
        if b.lact[G.unit[b.tau[m]], m] != m:
            out.append(Violation("left unit", (M[m],)))
        if b.ract[m, H.unit[b.sigma[m]]] != m:
            out.append(Violation("right unit", (M[m],)))
    for x, y, xy in G.composable_pairs:
        for m in np.flatnonzero(b.tau == G.src[y]):
            if b.lact[xy, m] != b.lact[x, b.lact[y, m]]:
                out.append(Violation("left composition", (G.arrows[x], G.arrows[y], M[m])))
    for h, k, hk in H.composable_pairs:
        for m in np.flatnonzero(b.sigma == H.tgt[h]):
            if b.ract[m, hk] != b.ract[b.ract[m, h], k]:
                out.append(Violation("right composition", (M[m], H.arrows[h], H.arrows[k])))
    for x in range(G.n_arrows):
        for m in np.flatnonzero(b.tau == G.src[x]):
            for h in H.t_fiber(b.sigma[m]):
                if b.ract[b.lact[x, m], h] != b.lact[x, b.ract[m, h]]:
                    out.append(Violation("actions commute", (G.arrows[x], M[m], H.arrows[h])))
    return out


def _principal_violations(b: Bibundle) -> list[Violation]:
    G, M = b.left, b.carrier
    out = []
    for r in range(b.right.n_objects):
        if not (b.sigma == r).any():
            out.append(Violation("sigma surjective", (b.right.objects[r],)))
    for x in range(G.n_arrows):
        for m in np.flatnonzero(b.tau == G.src[x]):
            if b.lact[x, m] == m and not G.is_unit(x):
                out.append(Violation("free", (G.arrows[x], M[m])))
    for m in range(b.size):
        reach = {int(b.lact[x, m]) for x in G.s_fiber(b.tau[m])}
        for m2 in b.sigma_fiber(b.sigma[m]):
            if int(m2) not in reach:
                out.append(Violation("transitive", (M[m], M[m2])))
    return out


def pairing_is_bijective(b: Bibundle) -> bool:
    """Whether (x, m) -> (x m, m) maps G_1 x_{G_0} M bijectively onto M x_{H_0} M."""
    G = b.left
    image = [(int(b.lact[x, m]), m) for m in range(b.size) for x in G.s_fiber(b.tau[m])]
    target = {(m1, m2) for m1 in range(b.size) for m2 in range(b.size) if b.sigma[m1] == b.sigma[m2]}
    surjective_sigma = len(set(b.sigma.tolist())) == b.right.n_objects
    return surjective_sigma and len(image) == len(set(image)) and set(image) == target


def validate_bibundle(b: Bibundle, check_principal: bool = True) -> list[Violation]:
    out = _action_violations(b)
    if not out and check_principal:
        out = _principal_violations(b)
    return out


def is_left_principal(b: Bibundle) -> bool:
    return not validate_bibundle(b, check_principal=True)


def canonical_bibundle(g: FiniteGroupoid) -> Bibundle:
    """G acting on its own arrows by left and right multiplication; tau = tgt, sigma = src."""
    return Bibundle(g, g, g.arrows, g.tgt.copy(), g.src.copy(), g.comp.copy(), g.comp.copy(),
                    name=f"canonical({g.name})")


def bibundle_from_functor(psi: GroupoidFunctor) -> Bibundle:
    """The left principal G-H bibundle of a functor psi: H -> G.

    Carrier: pairs (g, v) with src(g) = psi0(v); tau = tgt(g), sigma = v;
    x (g, v) = (x g, v) and (g, v) h = (g psi1(h), src h).
    """
    G, H = psi.cod, psi.dom
    pts = [(int(g), v) for v in range(H.n_objects) for g in G.s_fiber(psi.phi0[v])]
    idx = {p: i for i, p in enumerate(pts)}
    n = len(pts)
    lact = -np.ones((G.n_arrows, n), dtype=np.int64)
    ract = -np.ones((n, H.n_arrows), dtype=np.int64)
    for i, (g, v) in enumerate(pts):
        for x in G.s_fiber(G.tgt[g]):
            lact[x, i] = idx[(int(G.comp[x, g]), v)]
        for h in H.t_fiber(v):
            ract[i, h] = idx[(int(G.comp[g, psi.phi1[h]]), int(H.src[h]))]
    return Bibundle(G, H, tuple(f"({G.arrows[g]},{H.objects[v]})" for g, v in pts),
                    [G.tgt[g] for g, _ in pts], [v for _, v in pts], lact, ract,
                    name=f"M({psi.name})" if psi.name else "")


def reverse_bibundle(b: Bibundle) -> Bibundle:
    """The H-G bibundle h m := m h^-1, m x := x^-1 m."""
    G, H = b.left, b.right
    lact = -np.ones((H.n_arrows, b.size), dtype=np.int64)
    ract = -np.ones((b.size, G.n_arrows), dtype=np.int64)
    for m in range(b.size):
        for h in H.s_fiber(b.sigma[m]):
            lact[h, m] = b.ract[m, H.inv[h]]
        for x in G.t_fiber(b.tau[m]):
            ract[m, x] = b.lact[G.inv[x], m]
    return Bibundle(H, G, b.carrier, b.sigma.copy(), b.tau.copy(), lact, ract,
                    name=f"rev({b.name})" if b.name else "")


@dataclass(frozen=True)
class InducedMeasureSystem:
    """``mu[m]`` is the mass of m under the measure on its sigma-fiber."""

    mu: tuple[Fraction, ...]

    def equivariance_violations(self, b: Bibundle) -> list[Violation]:
        """Right translation by h carries mu^{tgt h} to mu^{src h}; checked on delta functions."""
        out = []
        H = b.right
        for h in range(H.n_arrows):
            for m in b.sigma_fiber(H.tgt[h]):
                if self.mu[b.ract[m, h]] != self.mu[m]:
                    out.append(Violation("equivariance", (H.arrows[h], b.carrier[m])))
        return out


def _mu_from_basepoint(b: Bibundle, haar: HaarSystem, m0: int) -> dict[int, Fraction]:
    G = b.left
    mu: dict[int, Fraction] = {}
    for x in G.t_fiber(b.tau[m0]):
        m = int(b.lact[G.inv[x], m0])
        mu[m] = mu.get(m, Fraction(0)) + haar.weight[x]
    return mu


def induced_measure(b: Bibundle, haar: HaarSystem, check: bool = True) -> InducedMeasureSystem:
    """Measures on sigma-fibers pulled back from the Haar system of the left groupoid.

    For a basepoint m0 over r, mu^r(m) sums weight(x) over x in G^{tau(m0)}
    with x^-1 m0 = m.  With ``check`` set, every other basepoint is tried too
    and must give the same measure.
    """
    mu: list[Fraction | None] = [None] * b.size
    for r in range(b.right.n_objects):
        fiber = b.sigma_fiber(r)
        if not fiber.size:
            raise ValueError(f"sigma is not surjective: empty fiber over {b.right.objects[r]}")
        ref = _mu_from_basepoint(b, haar, int(fiber[0]))
        if set(ref) != set(int(m) for m in fiber):
            raise ValueError("left action is not transitive on a sigma-fiber")
        if check:
            for m0 in fiber[1:]:
                if _mu_from_basepoint(b, haar, int(m0)) != ref:
                    raise ConsistencyError(f"induced measure depends on the basepoint {b.carrier[m0]}")
        for m, v in ref.items():
            mu[m] = v
    return InducedMeasureSystem(tuple(mu))


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo


def bibundle_tensor(b1: Bibundle, b2: Bibundle) -> tuple[Bibundle, dict]:
    """Orbit space of M x_{H_0} N under (m, n) -> (m h, h^-1 n).

    Each orbit is represented by its lexicographically least pair.  Returns
    the G-K bibundle and the map from fiber-product pairs to orbit ids.
    """
    if b1.right is not b2.left:
        raise ValueError("bibundles do not share the middle groupoid")
    H = b1.right
    pairs = [(m, n) for m in range(b1.size) for n in range(b2.size) if b1.sigma[m] == b2.tau[n]]
    uf = _UnionFind(pairs)
    for m, n in pairs:
        for h in H.t_fiber(b1.sigma[m]):
            uf.union((m, n), (int(b1.ract[m, h]), int(b2.lact[H.inv[h], n])))
    reps = sorted({uf.find(p) for p in pairs})
    oid = {r: i for i, r in enumerate(reps)}
    orbit_of = {p: oid[uf.find(p)] for p in pairs}
    G, K = b1.left, b2.right
    n_orb = len(reps)
    tau = np.zeros(n_orb, dtype=np.int64)
    sigma = np.zeros(n_orb, dtype=np.int64)
    lact = -np.ones((G.n_arrows, n_orb), dtype=np.int64)
    ract = -np.ones((n_orb, K.n_arrows), dtype=np.int64)
    for (m, n), o in orbit_of.items():
        for table, value in ((tau, b1.tau[m]), (sigma, b2.sigma[n])):
            if (m, n) == reps[o]:
                table[o] = value
        for x in G.s_fiber(b1.tau[m]):
            t = orbit_of[(int(b1.lact[x, m]), n)]
            if lact[x, o] not in (-1, t):
                raise ConsistencyError("induced left action is not well defined")
            lact[x, o] = t
        for k in K.t_fiber(b2.sigma[n]):
            t = orbit_of[(m, int(b2.ract[n, k]))]
            if ract[o, k] not in (-1, t):
                raise ConsistencyError("induced right action is not well defined")
            ract[o, k] = t
    for (m, n), o in orbit_of.items():
        if b1.tau[m] != tau[o] or b2.sigma[n] != sigma[o]:
            raise ConsistencyError("anchor maps are not constant on orbits")
    carrier = tuple(f"[{b1.carrier[m]}|{b2.carrier[n]}]" for m, n in reps)
    name = f"{b1.name}*{b2.name}" if b1.name and b2.name else ""
    return Bibundle(G, K, carrier, tau, sigma, lact, ract, name=name), orbit_of


def _components(b: Bibundle) -> list[list[int]]:
    """Orbits of the combined G x H action on the carrier."""
    seen, comps = set(), []
    for start in range(b.size):
        if start in seen:
            continue
        comp, queue = [], deque([start])
        seen.add(start)
        while queue:
            m = queue.popleft()
            comp.append(m)
            nbrs = [b.lact[x, m] for x in b.left.s_fiber(b.tau[m])]
            nbrs += [b.ract[m, h] for h in b.right.t_fiber(b.sigma[m])]
            for m2 in map(int, nbrs):
                if m2 not in seen:
                    seen.add(m2)
                    queue.append(m2)
        comps.append(comp)
    return comps


def _propagate(b1: Bibundle, b2: Bibundle, start: int, image: int, used: set) -> dict | None:
    phi = {start: image}
    queue = deque([start])
    while queue:
        m = queue.popleft()
        m_img = phi[m]
        if b1.tau[m] != b2.tau[m_img] or b1.sigma[m] != b2.sigma[m_img]:
            return None
        steps = [(int(b1.lact[x, m]), int(b2.lact[x, m_img])) for x in b1.left.s_fiber(b1.tau[m])]
        steps += [(int(b1.ract[m, h]), int(b2.ract[m_img, h])) for h in b1.right.t_fiber(b1.sigma[m])]
        for a, a_img in steps:
            if a in phi:
                if phi[a] != a_img:
                    return None
            else:
                phi[a] = a_img
                queue.append(a)
    images = list(phi.values())
    if len(set(images)) != len(images) or used.intersection(images):
        return None
    return phi


def bibundle_isomorphic(b1: Bibundle, b2: Bibundle) -> tuple[int, ...] | None:
    """An equivariant bijection M1 -> M2 commuting with both anchors, or None.

    One point per G x H orbit is anchored, its image is propagated through
    both actions, and the search backtracks on clashes.
    """
    if b1.left is not b2.left or b1.right is not b2.right:
        raise ValueError("bibundles live over different groupoids")
    if b1.size != b2.size:
        return None
    for r in range(b1.right.n_objects):
        if len(b1.sigma_fiber(r)) != len(b2.sigma_fiber(r)):
            return None
    comps = _components(b1)

    def search(i, used, acc):
        if i == len(comps):
            return acc
        start = comps[i][0]
        for cand in range(b2.size):
            if cand in used:
                continue
            phi = _propagate(b1, b2, start, cand, used)
            if phi is None or len(phi) != len(comps[i]):
                continue
            found = search(i + 1, used | set(phi.values()), {**acc, **phi})
            if found is not None:
                return found
        return None

    found = search(0, frozenset(), {})
    if found is None:
        return None
    return tuple(found[m] for m in range(b1.size))
