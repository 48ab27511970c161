"""Finite groupoids, functors between them and natural isomorphisms.

Objects and arrows are dense integer ids ``0..n-1`` with string labels kept
alongside for printing and serialization.  Composition follows the usual
"x after y" order: ``comp[x, y]`` is defined exactly when ``src[x] == tgt[y]``
and is ``-1`` otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import StructureError, Violation

__all__ = [
    "FiniteGroupoid",
    "GroupoidFunctor",
    "NaturalIsomorphism",
    "Orbit",
    "GroupTable",
    "validate_groupoid",
    "validate_functor",
    "build_standard",
    "unit_groupoid",
    "pair_groupoid",
    "group_groupoid",
    "action_groupoid",
    "cyclic_group_table",
    "product",
    "disjoint_union",
    "identity_functor",
    "compose_functors",
    "naturally_isomorphic",
    "orbits",
    "isotropy_group",
    "group_homomorphisms",
    "find_group_isomorphism",
    "random_functor",
    "random_groupoid",
    "symmetric_group_table",
]


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    objects: tuple[str, ...]
    arrows: tuple[str, ...]
    src: np.ndarray
    tgt: np.ndarray
    unit: np.ndarray
    inv: np.ndarray
    comp: np.ndarray
    name: str = ""

    def __post_init__(self):
        n_obj, n_arr = len(self.objects), len(self.arrows)
        for attr in ("src", "tgt", "unit", "inv", "comp"):
            arr = np.asarray(getattr(self, attr), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if n_obj == 0 or n_arr == 0:
            raise StructureError("groupoid must have at least one object and one arrow")
        if len(set(self.objects)) != n_obj or len(set(self.arrows)) != n_arr:
            raise StructureError("duplicate object or arrow label")
        shapes = {"src": (n_arr,), "tgt": (n_arr,), "unit": (n_obj,),
                  "inv": (n_arr,), "comp": (n_arr, n_arr)}
        for attr, shape in shapes.items():
            if getattr(self, attr).shape != shape:
                raise StructureError(f"table {attr} has shape {getattr(self, attr).shape}, expected {shape}")
        _check_range("src", self.src, n_obj)
        _check_range("tgt", self.tgt, n_obj)
        _check_range("unit", self.unit, n_arr)
        _check_range("inv", self.inv, n_arr)
        bad = self.comp[(self.comp < -1) | (self.comp >= n_arr)]
        if bad.size:
            raise StructureError(f"table comp refers to unknown arrow id {int(bad[0])}")

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_arrows(self) -> int:
        return len(self.arrows)

    def arrow(self, label: str) -> int:
        try:
            return self.arrows.index(label)
        except ValueError:
            raise KeyError(f"no arrow labelled {label!r}") from None

    def object(self, label: str) -> int:
        try:
            return self.objects.index(label)
        except ValueError:
            raise KeyError(f"no object labelled {label!r}") from None

    def t_fiber(self, u: int) -> np.ndarray:
        """Arrows with target ``u``."""
        return np.flatnonzero(self.tgt == u)

    def s_fiber(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.src == u)

    def hom(self, u: int, v: int) -> np.ndarray:
        """Arrows from ``u`` to ``v``."""
        return np.flatnonzero((self.src == u) & (self.tgt == v))

    def is_unit(self, x: int) -> bool:
        return bool(self.unit[self.src[x]] == x)

    @property
    def composable_pairs(self) -> np.ndarray:
        """All (x, y, xy) with src(x) == tgt(y), as an (k, 3) array."""
        xs, ys = np.nonzero(self.comp >= 0)
        return np.stack([xs, ys, self.comp[xs, ys]], axis=1)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<FiniteGroupoid{label}: {self.n_objects} objects, {self.n_arrows} arrows>"


def _check_range(name, arr, n):
    bad = arr[(arr < 0) | (arr >= n)]
    if bad.size:
        raise StructureError(f"table {name} refers to unknown id {int(bad[0])}")


def from_tables(objects, arrows, src, tgt, unit, inv, comp_triples, name="") -> FiniteGroupoid:
    """Build a groupoid from label-level tables; ``comp_triples`` lists (x, y, xy)."""
    objects, arrows = tuple(objects), tuple(arrows)
    oid = {o: i for i, o in enumerate(objects)}
    aid = {a: i for i, a in enumerate(arrows)}

    def look(table, key, kind):
        try:
            return table[key]
        except KeyError:
            raise StructureError(f"unknown {kind} id {key!r}") from None

    n = len(arrows)
    comp = -np.ones((n, n), dtype=np.int64)
    for x, y, xy in comp_triples:
        comp[look(aid, x, "arrow"), look(aid, y, "arrow")] = look(aid, xy, "arrow")
    return FiniteGroupoid(
        objects, arrows,
        src=[look(oid, src[a], "object") for a in arrows],
        tgt=[look(oid, tgt[a], "object") for a in arrows],
        unit=[look(aid, unit[o], "arrow") for o in objects],
        inv=[look(aid, inv[a], "arrow") for a in arrows],
        comp=comp, name=name,
    )


def validate_groupoid(g: FiniteGroupoid) -> list[Violation]:
    """Check every groupoid axiom by enumeration; an empty list means valid."""
    out: list[Violation] = []
    A = g.arrows
    n = g.n_arrows
    for x in range(n):
        for y in range(n):
            xy = int(g.comp[x, y])
            if (xy >= 0) != (g.src[x] == g.tgt[y]):
                out.append(Violation("composability", (A[x], A[y])))
            elif xy >= 0 and (g.tgt[xy] != g.tgt[x] or g.src[xy] != g.src[y]):
                out.append(Violation("composite endpoints", (A[x], A[y], A[xy])))
    if out:
        return out
    for x, y, xy in g.composable_pairs:
        for z in g.t_fiber(g.src[y]):
            if g.comp[xy, z] != g.comp[x, g.comp[y, z]]:
                out.append(Violation("associativity", (A[x], A[y], A[z])))
    for u in range(g.n_objects):
        e = int(g.unit[u])
        if g.src[e] != u or g.tgt[e] != u:
            out.append(Violation("unit endpoints", (g.objects[u], A[e])))
    if len(set(g.unit.tolist())) != g.n_objects:
        out.append(Violation("unit injective", tuple(A[e] for e in g.unit)))
    for x in range(n):
        if g.comp[g.unit[g.tgt[x]], x] != x or g.comp[x, g.unit[g.src[x]]] != x:
            out.append(Violation("unit law", (A[x],)))
        ix = int(g.inv[x])
        if (g.comp[x, ix] != g.unit[g.tgt[x]]) or (g.comp[ix, x] != g.unit[g.src[x]]):
            out.append(Violation("inverse", (A[x],)))
        elif g.inv[ix] != x:
            out.append(Violation("inverse involution", (A[x],)))
    return out


# -- standard constructions ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A finite group given by its multiplication table ``mul[a, b] = a*b``."""

    mul: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mul = np.asarray(self.mul, dtype=np.int64)
        object.__setattr__(self, "mul", mul)
        n = mul.shape[0]
        if mul.shape != (n, n) or n == 0 or mul.min() < 0 or mul.max() >= n:
            raise StructureError("group table must be a square table of element ids")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"g{i}" for i in range(n)))

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    @property
    def identity(self) -> int:
        for e in range(self.order):
            if np.array_equal(self.mul[e], np.arange(self.order)):
                return e
        raise StructureError("group table has no identity element")

    def inverse(self, a: int) -> int:
        return int(np.flatnonzero(self.mul[a] == self.identity)[0])

    def element_order(self, a: int) -> int:
        e, k, b = self.identity, 1, a
        while b != e:
            b, k = int(self.mul[b, a]), k + 1
        return k

    def check(self):
        n, e = self.order, self.identity
        m = self.mul
        for a, b, c in itertools.product(range(n), repeat=3):
            if m[m[a, b], c] != m[a, m[b, c]]:
                raise StructureError(f"group table is not associative at {(a, b, c)}")
        for a in range(n):
            if not (m[a] == e).any() or sorted(m[a].tolist()) != list(range(n)):
                raise StructureError(f"element {a} has no inverse")


def cyclic_group_table(n: int) -> GroupTable:
    i = np.arange(n)
    return GroupTable((i[:, None] + i[None, :]) % n, tuple(str(k) for k in range(n)))


def symmetric_group_table(n: int) -> GroupTable:
    perms = list(itertools.permutations(range(n)))
    pos = {p: i for i, p in enumerate(perms)}
    mul = [[pos[tuple(a[b[k]] for k in range(n))] for b in perms] for a in perms]
    return GroupTable(mul, tuple("".join(str(k + 1) for k in p) for p in perms))


def unit_groupoid(n: int) -> FiniteGroupoid:
    objs = [str(i) for i in range(1, n + 1)]
    arrs = [f"id{o}" for o in objs]
    idx = list(range(n))
    comp = -np.ones((n, n), dtype=np.int64)
    comp[idx, idx] = idx
    return FiniteGroupoid(tuple(objs), tuple(arrs), idx, idx, idx, idx, comp, name=f"unit{n}")


def pair_groupoid(n: int) -> FiniteGroupoid:
    """Pair groupoid on {1..n}: arrow (i,j) goes from j to i."""
    objs = tuple(str(i) for i in range(1, n + 1))
    pairs = [(i, j) for i in range(n) for j in range(n)]
    aid = {p: k for k, p in enumerate(pairs)}
    N = len(pairs)
    comp = -np.ones((N, N), dtype=np.int64)
    for (i, j), x in aid.items():
        for k in range(n):
            comp[x, aid[(j, k)]] = aid[(i, k)]
    return FiniteGroupoid(
        objs, tuple(f"({i + 1},{j + 1})" for i, j in pairs),
        src=[j for _, j in pairs], tgt=[i for i, _ in pairs],
        unit=[aid[(i, i)] for i in range(n)], inv=[aid[(j, i)] for i, j in pairs],
        comp=comp, name=f"pair{n}",
    )


def group_groupoid(table: GroupTable, name: str = "") -> FiniteGroupoid:
    table.check()
    n = table.order
    zeros = [0] * n
    inv = [table.inverse(a) for a in range(n)]
    return FiniteGroupoid(("*",), table.labels, zeros, zeros, [table.identity], inv,
                          table.mul.copy(), name=name)


def action_groupoid(table: GroupTable, act: Sequence[Sequence[int]], points: Sequence[str] | None = None,
                    name: str = "") -> FiniteGroupoid:
    """Action groupoid of ``act[g][p] = g.p``; the arrow (g,p) goes from p to g.p."""
    table.check()
    act = np.asarray(act, dtype=np.int64)
    n_g = table.order
    n_p = act.shape[1]
    e = table.identity
    if act.shape[0] != n_g or not np.array_equal(act[e], np.arange(n_p)):
        raise StructureError("identity must act trivially")
    for a, b in itertools.product(range(n_g), repeat=2):
        if not np.array_equal(act[table.mul[a, b]], act[a][act[b]]):
            raise StructureError(f"not an action: ({a}*{b}).p != {a}.({b}.p)")
    points = tuple(points) if points else tuple(str(p) for p in range(1, n_p + 1))
    pairs = [(a, p) for a in range(n_g) for p in range(n_p)]
    aid = {q: k for k, q in enumerate(pairs)}
    N = len(pairs)
    comp = -np.ones((N, N), dtype=np.int64)
    for (b, q), x in aid.items():
        for a in range(n_g):
            # (b, q) after (a, p) needs q == a.p
            for p in np.flatnonzero(act[a] == q):
                comp[x, aid[(a, int(p))]] = aid[(int(table.mul[b, a]), int(p))]
    return FiniteGroupoid(
        points, tuple(f"({table.labels[a]},{points[p]})" for a, p in pairs),
        src=[p for _, p in pairs], tgt=[int(act[a, p]) for a, p in pairs],
        unit=[aid[(e, p)] for p in range(n_p)],
        inv=[aid[(table.inverse(a), int(act[a, p]))] for a, p in pairs],
        comp=comp, name=name,
    )


def build_standard(kind: str, data) -> FiniteGroupoid:
    """Dispatch to the standard constructions.

    ``kind`` is one of ``unit``/``pair`` (data: size), ``group`` (data: a
    multiplication table) or ``action`` (data: ``(table, act)``).
    """
    if kind == "unit":
        return unit_groupoid(int(data))
    if kind == "pair":
        return pair_groupoid(int(data))
    if kind == "group":
        table = data if isinstance(data, GroupTable) else GroupTable(data)
        return group_groupoid(table)
    if kind == "action":
        table, act = data
        table = table if isinstance(table, GroupTable) else GroupTable(table)
        return action_groupoid(table, act)
    raise ValueError(f"unknown standard groupoid kind {kind!r}")


def product(g: FiniteGroupoid, h: FiniteGroupoid) -> FiniteGroupoid:
    na, nb = g.n_arrows, h.n_arrows
    no_b = h.n_objects

    def a(x, y):
        return x * nb + y

    comp = -np.ones((na * nb, na * nb), dtype=np.int64)
    for x1, x2 in zip(*np.nonzero(g.comp >= 0)):
        for y1, y2 in zip(*np.nonzero(h.comp >= 0)):
            comp[a(x1, y1), a(x2, y2)] = a(g.comp[x1, x2], h.comp[y1, y2])
    xs, ys = np.divmod(np.arange(na * nb), nb)
    us, vs = np.divmod(np.arange(g.n_objects * no_b), no_b)
    return FiniteGroupoid(
        tuple(f"{g.objects[u]}.{h.objects[v]}" for u, v in zip(us, vs)),
        tuple(f"{g.arrows[x]}.{h.arrows[y]}" for x, y in zip(xs, ys)),
        src=g.src[xs] * no_b + h.src[ys], tgt=g.tgt[xs] * no_b + h.tgt[ys],
        unit=[a(g.unit[u], h.unit[v]) for u, v in zip(us, vs)],
        inv=[a(g.inv[x], h.inv[y]) for x, y in zip(xs, ys)],
        comp=comp, name=f"{g.name}x{h.name}" if g.name and h.name else "",
    )


def disjoint_union(parts: Sequence[FiniteGroupoid], name: str = "") -> FiniteGroupoid:
    if len(parts) == 1:
        return parts[0]
    objs, arrs, src, tgt, unit, inv = [], [], [], [], [], []
    N = sum(p.n_arrows for p in parts)
    comp = -np.ones((N, N), dtype=np.int64)
    oo = ao = 0
    for i, p in enumerate(parts):
        objs += [f"{i}:{o}" for o in p.objects]
        arrs += [f"{i}:{x}" for x in p.arrows]
        src += (p.src + oo).tolist()
        tgt += (p.tgt + oo).tolist()
        unit += (p.unit + ao).tolist()
        inv += (p.inv + ao).tolist()
        block = p.comp.copy()
        block[block >= 0] += ao
        comp[ao:ao + p.n_arrows, ao:ao + p.n_arrows] = block
        oo += p.n_objects
        ao += p.n_arrows
    return FiniteGroupoid(tuple(objs), tuple(arrs), src, tgt, unit, inv, comp, name=name)


# -- orbits and isotropy --------------------------------------------------------


@dataclass(frozen=True)
class Orbit:
    """An orbit of the object set, with a basepoint and chosen connecting arrows.

    ``connector[u]`` is an arrow from ``base`` to ``u``; ``connector[base]``
    is the unit at ``base``.
    """

    base: int
    members: tuple[int, ...]
    connector: dict = field(compare=False)
    isotropy: tuple[int, ...]


def orbits(g: FiniteGroupoid) -> list[Orbit]:
    seen: set[int] = set()
    out = []
    for u0 in range(g.n_objects):
        if u0 in seen:
            continue
        conn = {}
        for x in g.s_fiber(u0):
            conn.setdefault(int(g.tgt[x]), int(x))
        conn[u0] = int(g.unit[u0])
        seen.update(conn)
        out.append(Orbit(u0, tuple(sorted(conn)), conn, tuple(int(x) for x in g.hom(u0, u0))))
    return out


def isotropy_group(g: FiniteGroupoid, u: int) -> tuple[GroupTable, tuple[int, ...]]:
    """The isotropy group at ``u`` as a table, plus the arrow ids of its elements."""
    elems = tuple(int(x) for x in g.hom(u, u))
    pos = {x: i for i, x in enumerate(elems)}
    mul = [[pos[int(g.comp[a, b])] for b in elems] for a in elems]
    return GroupTable(mul, tuple(g.arrows[x] for x in elems)), elems


def _generators(t: GroupTable) -> list[int]:
    e = t.identity
    span = {e}
    gens = []
    for a in range(t.order):
        if a in span:
            continue
        gens.append(a)
        frontier = list(span)
        span = set(span)
        while frontier:
            new = []
            for b in frontier:
                for c in gens:
                    d = int(t.mul[b, c])
                    if d not in span:
                        span.add(d)
                        new.append(d)
            frontier = new
    return gens


def _extend_hom(a: GroupTable, b: GroupTable, gens, images) -> dict | None:
    hom = {a.identity: b.identity}
    for g, im in zip(gens, images):
        if hom.get(g, im) != im:
            return None
        hom[g] = im
    frontier = list(hom)
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = int(a.mul[x, g])
                iy = int(b.mul[hom[x], hom[g]])
                if y in hom:
                    if hom[y] != iy:
                        return None
                else:
                    hom[y] = iy
                    new.append(y)
        frontier = new
    for x in range(a.order):
        for y in range(a.order):
            if hom[int(a.mul[x, y])] != b.mul[hom[x], hom[y]]:
                return None
    return hom


def group_homomorphisms(a: GroupTable, b: GroupTable) -> Iterator[tuple[int, ...]]:
    """All homomorphisms a -> b, as image tuples indexed by elements of a."""
    gens = _generators(a)
    choices = [[y for y in range(b.order) if a.element_order(g) % b.element_order(y) == 0] for g in gens]
    seen = set()
    for images in itertools.product(*choices):
        hom = _extend_hom(a, b, gens, images)
        if hom is not None:
            img = tuple(hom[x] for x in range(a.order))
            if img not in seen:
                seen.add(img)
                yield img


def find_group_isomorphism(a: GroupTable, b: GroupTable) -> tuple[int, ...] | None:
    if a.order != b.order:
        return None
    if sorted(map(a.element_order, range(a.order))) != sorted(map(b.element_order, range(b.order))):
        return None
    gens = _generators(a)
    choices = [[y for y in range(b.order) if b.element_order(y) == a.element_order(g)] for g in gens]
    for images in itertools.product(*choices):
        hom = _extend_hom(a, b, gens, images)
        if hom is not None and len(set(hom.values())) == a.order:
            return tuple(hom[x] for x in range(a.order))
    return None


# -- functors -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupoidFunctor:
    dom: FiniteGroupoid
    cod: FiniteGroupoid
    phi0: np.ndarray
    phi1: np.ndarray
    name: str = ""

    def __post_init__(self):
        for attr, n_dom, n_cod in (("phi0", self.dom.n_objects, self.cod.n_objects),
                                   ("phi1", self.dom.n_arrows, self.cod.n_arrows)):
            arr = np.asarray(getattr(self, attr), dtype=np.int64)
            if arr.shape != (n_dom,):
                raise StructureError(f"{attr} must have one entry per domain element")
            _check_range(attr, arr, n_cod)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @classmethod
    def from_arrow_map(cls, dom, cod, phi1, name=""):
        """phi0 is read off from phi1 on unit arrows."""
        phi1 = np.asarray(phi1, dtype=np.int64)
        return cls(dom, cod, cod.src[phi1[dom.unit]], phi1, name=name)

    def __eq__(self, other):
        return (isinstance(other, GroupoidFunctor) and self.dom is other.dom and self.cod is other.cod
                and np.array_equal(self.phi0, other.phi0) and np.array_equal(self.phi1, other.phi1))

    __hash__ = None


def validate_functor(f: GroupoidFunctor) -> list[Violation]:
    G, H = f.dom, f.cod
    out = []
    for x in range(G.n_arrows):
        y = f.phi1[x]
        if H.src[y] != f.phi0[G.src[x]] or H.tgt[y] != f.phi0[G.tgt[x]]:
            out.append(Violation("functor endpoints", (G.arrows[x],)))
        if f.phi1[G.inv[x]] != H.inv[y]:
            out.append(Violation("functor inverse", (G.arrows[x],)))
    for u in range(G.n_objects):
        if f.phi1[G.unit[u]] != H.unit[f.phi0[u]]:
            out.append(Violation("functor unit", (G.objects[u],)))
    for x, y, xy in G.composable_pairs:
        if H.comp[f.phi1[x], f.phi1[y]] != f.phi1[xy]:
            out.append(Violation("functor composition", (G.arrows[x], G.arrows[y])))
    return out


def identity_functor(g: FiniteGroupoid) -> GroupoidFunctor:
    return GroupoidFunctor(g, g, np.arange(g.n_objects), np.arange(g.n_arrows), name=f"id_{g.name}")


def compose_functors(f: GroupoidFunctor, g: GroupoidFunctor) -> GroupoidFunctor:
    """The composite ``g . f`` (apply ``f`` first)."""
    if f.cod is not g.dom:
        raise ValueError("cannot compose: codomain of the first functor is not the domain of the second")
    name = f"{g.name}.{f.name}" if f.name and g.name else ""
    return GroupoidFunctor(f.dom, g.cod, g.phi0[f.phi0], g.phi1[f.phi1], name=name)


@dataclass(frozen=True, eq=False)
class NaturalIsomorphism:
    """``eta[u]`` is an arrow of the codomain from ``source.phi0(u)`` to ``target.phi0(u)``."""

    source: GroupoidFunctor
    target: GroupoidFunctor
    eta: tuple[int, ...]

    def violations(self) -> list[Violation]:
        G, H = self.source.dom, self.source.cod
        f, g, eta = self.source, self.target, self.eta
        out = []
        for u in range(G.n_objects):
            if H.src[eta[u]] != f.phi0[u] or H.tgt[eta[u]] != g.phi0[u]:
                out.append(Violation("component endpoints", (G.objects[u],)))
        if out:
            return out
        for x in range(G.n_arrows):
            if H.comp[eta[G.tgt[x]], f.phi1[x]] != H.comp[g.phi1[x], eta[G.src[x]]]:
                out.append(Violation("naturality", (G.arrows[x],)))
        return out

    def inverse(self) -> "NaturalIsomorphism":
        H = self.source.cod
        return NaturalIsomorphism(self.target, self.source, tuple(int(H.inv[e]) for e in self.eta))


def naturally_isomorphic(f: GroupoidFunctor, g: GroupoidFunctor) -> NaturalIsomorphism | None:
    """Search for a natural isomorphism f => g.

    Within an orbit of the domain the component at the basepoint fixes every
    other component (eta(v) = g(a) eta(u0) f(a)^-1 for a: u0 -> v), so the
    search runs over basepoint components only and checks naturality on the
    propagated choice.
    """
    if f.dom is not g.dom or f.cod is not g.cod:
        raise ValueError("functors must share domain and codomain")
    G, H = f.dom, f.cod
    eta = [-1] * G.n_objects
    for orb in orbits(G):
        u0 = orb.base
        found = False
        for cand in H.hom(f.phi0[u0], g.phi0[u0]):
            for v, a in orb.connector.items():
                eta[v] = int(H.comp[H.comp[g.phi1[a], cand], H.inv[f.phi1[a]]])
            if all(H.comp[eta[G.tgt[x]], f.phi1[x]] == H.comp[g.phi1[x], eta[G.src[x]]]
                   for u in orb.members for x in G.s_fiber(u)):
                found = True
                break
        if not found:
            return None
    return NaturalIsomorphism(f, g, tuple(eta))


def random_functor(dom: FiniteGroupoid, cod: FiniteGroupoid, rng: np.random.Generator) -> GroupoidFunctor:
    """A uniformly chosen-by-parts functor.

    For each orbit of ``dom``: pick the image v0 of the basepoint, an arrow
    b_u out of v0 for every other member, and a homomorphism between the
    isotropy groups.  Every functor arises this way.
    """
    phi0 = np.zeros(dom.n_objects, dtype=np.int64)
    phi1 = np.zeros(dom.n_arrows, dtype=np.int64)
    for orb in orbits(dom):
        u0 = orb.base
        v0 = int(rng.integers(cod.n_objects))
        b = {u0: int(cod.unit[v0])}
        out_v0 = cod.s_fiber(v0)
        for u in orb.members:
            if u != u0:
                b[u] = int(rng.choice(out_v0))
        ga, ea = isotropy_group(dom, u0)
        gb, eb = isotropy_group(cod, v0)
        homs = list(group_homomorphisms(ga, gb))
        rho = homs[int(rng.integers(len(homs)))]
        rho_arrow = {ea[i]: eb[rho[i]] for i in range(len(ea))}
        for u in orb.members:
            phi0[u] = cod.tgt[b[u]]
        for u in orb.members:
            for x in dom.s_fiber(u):
                v = int(dom.tgt[x])
                a_u, a_v = orb.connector[u], orb.connector[v]
                gamma = int(dom.comp[dom.comp[dom.inv[a_v], x], a_u])
                img = cod.comp[cod.comp[b[v], rho_arrow[gamma]], cod.inv[b[u]]]
                phi1[x] = img
    return GroupoidFunctor(dom, cod, phi0, phi1)


def random_groupoid(rng: np.random.Generator, max_arrows: int = 10) -> FiniteGroupoid:
    """A disjoint union of small transitive pieces with at most ``max_arrows`` arrows.

    Pieces are pair groupoids, cyclic groups, S3 and pair(2) x Z/2, so the
    result mixes trivial, abelian and non-abelian isotropy.
    """
    z2 = group_groupoid(cyclic_group_table(2), name="z2")
    pieces = [pair_groupoid(1), pair_groupoid(2), pair_groupoid(3), z2,
              group_groupoid(cyclic_group_table(3), name="z3"),
              group_groupoid(symmetric_group_table(3), name="s3"),
              product(pair_groupoid(2), z2)]
    pieces = [p for p in pieces if p.n_arrows <= max_arrows]
    chosen, total = [], 0
    while True:
        fits = [p for p in pieces if total + p.n_arrows <= max_arrows]
        if not fits or (chosen and rng.random() < 0.35):
            break
        piece = fits[int(rng.integers(len(fits)))]
        chosen.append(piece)
        total += piece.n_arrows
    return disjoint_union(chosen, name="+".join(p.name for p in chosen))
