"""JSON workspace files: named groupoids, measures, functors, bibundles and jobs.

Everything is referred to by label.  Weights are ``"p/q"`` strings.  A
measure is keyed by the name of its groupoid; groupoids without one carry
the counting Haar system and unit base weights.  Groupoid names not defined
in the workspace fall back to the built-ins ``pairN``, ``unitN``, ``zN``,
``sN`` and ``point``.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .bibundle import Bibundle, bibundle_from_functor, canonical_bibundle, reverse_bibundle, validate_bibundle
from .errors import StructureError
from .groupoid import (FiniteGroupoid, GroupoidFunctor, cyclic_group_table, from_tables, group_groupoid,
                       identity_functor, pair_groupoid, symmetric_group_table, unit_groupoid, validate_functor,
                       validate_groupoid)
from .measure import MeasuredGroupoid, counting_measured, haar_from_source_weights, HaarSystem, validate_haar

__all__ = [
    "Workspace",
    "WorkspaceError",
    "parse_workspace",
    "load_workspace",
    "normalize",
    "serialize",
    "builtin_groupoid",
    "workspace_schema",
]

_SECTIONS = ("groupoids", "measures", "functors", "bibundles", "jobs")


class WorkspaceError(ValueError):
    """A workspace could not be loaded; ``kind`` is syntax, schema, reference or validation."""

    def __init__(self, kind: str, message: str, location: str | None = None):
        self.kind = kind
        self.location = location
        super().__init__(f"{kind} error{f' at {location}' if location else ''}: {message}")


def workspace_schema() -> dict:
    text = resources.files("groupoid_morita").joinpath("schemas/workspace.schema.json").read_text()
    return json.loads(text)


_BUILTIN = re.compile(r"^(pair|unit|z|s)([1-9][0-9]*)$")


def builtin_groupoid(name: str) -> FiniteGroupoid | None:
    if name == "point":
        g = pair_groupoid(1)
        return FiniteGroupoid(g.objects, g.arrows, g.src, g.tgt, g.unit, g.inv, g.comp, name="point")
    m = _BUILTIN.match(name)
    if not m:
        return None
    kind, n = m.group(1), int(m.group(2))
    if kind == "pair":
        return pair_groupoid(n)
    if kind == "unit":
        return unit_groupoid(n)
    if kind == "z":
        return group_groupoid(cyclic_group_table(n), name=name)
    if n > 5:
        return None
    return group_groupoid(symmetric_group_table(n), name=name)


def _frac(s: str) -> Fraction:
    return Fraction(s)


def _fmt(q: Fraction) -> str:
    return str(Fraction(q))


@dataclass
class Workspace:
    """A parsed workspace.  ``doc`` is the normalized document it was read from."""

    doc: dict
    groupoids: dict = field(default_factory=dict)
    measures: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    bibundles: dict = field(default_factory=dict)
    jobs: dict = field(default_factory=dict)
    path: str | None = None

    def groupoid(self, name: str) -> FiniteGroupoid:
        if name not in self.groupoids:
            g = builtin_groupoid(name)
            if g is None:
                raise WorkspaceError("reference", f"unknown groupoid {name!r}")
            self.groupoids[name] = g
        return self.groupoids[name]

    def measured(self, g: FiniteGroupoid | str) -> MeasuredGroupoid:
        name = g if isinstance(g, str) else self._name_of(g)
        if name not in self.measures:
            self.measures[name] = counting_measured(self.groupoid(name))
        return self.measures[name]

    def _name_of(self, g: FiniteGroupoid) -> str:
        for k, v in self.groupoids.items():
            if v is g:
                return k
        raise WorkspaceError("reference", f"groupoid {g!r} is not part of the workspace")

    def functor(self, name: str) -> GroupoidFunctor:
        if name not in self.functors:
            raise WorkspaceError("reference", f"unknown functor {name!r}")
        return self.functors[name]

    def bibundle(self, name: str) -> Bibundle:
        if name not in self.bibundles:
            raise WorkspaceError("reference", f"unknown bibundle {name!r}")
        return self.bibundles[name]


def empty_workspace() -> Workspace:
    return Workspace(normalize({"version": 1}))


# -- normalization ----------------------------------------------------------------


def _sorted_rows(rows):
    return sorted([list(r) for r in rows])


def normalize(doc: dict) -> dict:
    """Canonical form of a schema-valid document: every section present, tables sorted, weights reduced."""
    doc = copy.deepcopy(doc)
    for s in _SECTIONS:
        doc.setdefault(s, {})
    for g in doc["groupoids"].values():
        if "objects" in g:
            for key in ("units", "inverses", "composition"):
                g[key] = _sorted_rows(g[key])
    for m in doc["measures"].values():
        for key in ("source_weights", "haar", "base"):
            if key in m:
                m[key] = {k: _fmt(_frac(v)) for k, v in m[key].items()}
    for f in doc["functors"].values():
        if f.get("identity") is False:
            del f["identity"]
        for key in ("objects", "arrows"):
            if key in f:
                f[key] = _sorted_rows(f[key])
    for b in doc["bibundles"].values():
        for key in ("tau", "sigma", "left_action", "right_action"):
            if key in b:
                b[key] = _sorted_rows(b[key])
    for j in doc["jobs"].values():
        if j.get("exact") is False:
            del j["exact"]
    return doc


def serialize(ws: Workspace) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_document(ws), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _document(ws: Workspace) -> dict:
    """Rebuild the document from the loaded objects (shortcut forms are kept as written)."""
    src = ws.doc
    out = {"version": 1, "groupoids": {}, "measures": {}, "functors": {}, "bibundles": {},
           "jobs": copy.deepcopy(src["jobs"])}
    for name, spec in src["groupoids"].items():
        out["groupoids"][name] = dict(spec) if "standard" in spec else _groupoid_doc(ws.groupoids[name])
    # a measure is determined by its (normalized) spec
    out["measures"] = copy.deepcopy(src["measures"])
    for name, spec in src["functors"].items():
        if spec.get("identity"):
            out["functors"][name] = dict(spec)
            continue
        f = ws.functors[name]
        d = {"dom": spec["dom"], "cod": spec["cod"],
             "arrows": [[f.dom.arrows[x], f.cod.arrows[y]] for x, y in enumerate(f.phi1)]}
        if "objects" in spec:
            d["objects"] = [[f.dom.objects[u], f.cod.objects[v]] for u, v in enumerate(f.phi0)]
        out["functors"][name] = d
    for name, spec in src["bibundles"].items():
        if "carrier" not in spec:
            out["bibundles"][name] = dict(spec)
            continue
        b = ws.bibundles[name]
        out["bibundles"][name] = {
            "left": spec["left"], "right": spec["right"], "carrier": list(b.carrier),
            "tau": [[m, b.left.objects[u]] for m, u in zip(b.carrier, b.tau)],
            "sigma": [[m, b.right.objects[v]] for m, v in zip(b.carrier, b.sigma)],
            "left_action": [[b.left.arrows[x], b.carrier[m], b.carrier[b.lact[x, m]]]
                            for x in range(b.left.n_arrows) for m in range(b.size) if b.lact[x, m] >= 0],
            "right_action": [[b.carrier[m], b.right.arrows[h], b.carrier[b.ract[m, h]]]
                             for m in range(b.size) for h in range(b.right.n_arrows) if b.ract[m, h] >= 0],
        }
    return normalize(out)


def _groupoid_doc(g: FiniteGroupoid) -> dict:
    a = g.arrows
    return {
        "objects": list(g.objects),
        "arrows": [[a[x], g.objects[g.src[x]], g.objects[g.tgt[x]]] for x in range(g.n_arrows)],
        "units": [[g.objects[u], a[g.unit[u]]] for u in range(g.n_objects)],
        "inverses": [[a[x], a[g.inv[x]]] for x in range(g.n_arrows)],
        "composition": [[a[x], a[y], a[xy]] for x, y, xy in g.composable_pairs],
    }


# -- loading ---------------------------------------------------------------------------


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path)


def _unique(labels, where):
    seen = set()
    for lab in labels:
        if lab in seen:
            raise WorkspaceError("validation", f"duplicate label {lab!r}", where)
        seen.add(lab)


def _lookup(table: dict, key, kind: str, where: str):
    if key not in table:
        raise WorkspaceError("reference", f"unknown {kind} {key!r}", where)
    return table[key]


def _build_groupoid(name, spec, where) -> FiniteGroupoid:
    if "standard" in spec:
        n = spec["size"]
        kind = spec["standard"]
        if kind == "symmetric" and n > 5:
            raise WorkspaceError("validation", "symmetric groups are limited to degree 5", where)
        g = {"pair": pair_groupoid, "unit": unit_groupoid,
             "cyclic": lambda k: group_groupoid(cyclic_group_table(k)),
             "symmetric": lambda k: group_groupoid(symmetric_group_table(k))}[kind](n)
        return FiniteGroupoid(g.objects, g.arrows, g.src, g.tgt, g.unit, g.inv, g.comp, name=name)
    objects = spec["objects"]
    arrows = [a[0] for a in spec["arrows"]]
    _unique(objects, where + "/objects")
    _unique(arrows, where + "/arrows")
    src = {a: s for a, s, _ in spec["arrows"]}
    tgt = {a: t for a, _, t in spec["arrows"]}
    unit = dict(map(tuple, spec["units"]))
    inv = dict(map(tuple, spec["inverses"]))
    for o in objects:
        if o not in unit:
            raise WorkspaceError("validation", f"object {o!r} has no unit arrow", where + "/units")
    for a in arrows:
        if a not in inv:
            raise WorkspaceError("validation", f"arrow {a!r} has no inverse", where + "/inverses")
    try:
        g = from_tables(objects, arrows, src, tgt, unit, inv, spec["composition"], name=name)
    except StructureError as exc:
        raise WorkspaceError("reference", str(exc), where) from None
    viol = validate_groupoid(g)
    if viol:
        raise WorkspaceError("validation", f"groupoid axiom fails: {viol[0]}", where)
    return g


def _weights(table: dict, labels, where, default=None):
    for k in table:
        if k not in labels:
            raise WorkspaceError("reference", f"unknown label {k!r}", where)
    out = []
    for lab in labels:
        if lab in table:
            out.append(_frac(table[lab]))
        elif default is not None:
            out.append(default)
        else:
            raise WorkspaceError("validation", f"missing weight for {lab!r}", where)
    return out


def _build_measure(g: FiniteGroupoid, spec, where) -> MeasuredGroupoid:
    base = _weights(spec.get("base", {}), g.objects, where + "/base", Fraction(1))
    if "haar" in spec:
        haar = HaarSystem(_weights(spec["haar"], g.arrows, where + "/haar"))
    else:
        c = _weights(spec.get("source_weights", {}), g.objects, where + "/source_weights", Fraction(1))
        haar = haar_from_source_weights(g, c)
    try:
        mg = MeasuredGroupoid(g, haar, base)
    except StructureError as exc:
        raise WorkspaceError("validation", str(exc), where) from None
    viol = validate_haar(mg)
    if viol:
        raise WorkspaceError("validation", f"Haar system fails {viol[0]}", where)
    return mg


def _build_functor(ws: Workspace, name, spec, where) -> GroupoidFunctor:
    dom, cod = ws.groupoid(spec["dom"]), ws.groupoid(spec["cod"])
    if spec.get("identity"):
        if dom is not cod:
            raise WorkspaceError("validation", "an identity functor needs dom == cod", where)
        f = identity_functor(dom)
        return GroupoidFunctor(dom, cod, f.phi0, f.phi1, name=name)
    oid = {o: i for i, o in enumerate(cod.objects)}
    aid = {a: i for i, a in enumerate(cod.arrows)}
    arrows = dict(map(tuple, spec.get("arrows", [])))
    phi1 = [_lookup(aid, _lookup(arrows, a, "arrow image of", where + "/arrows"), "arrow", where + "/arrows")
            for a in dom.arrows]
    for k in arrows:
        if k not in dom.arrows:
            raise WorkspaceError("reference", f"unknown arrow {k!r}", where + "/arrows")
    if "objects" in spec:
        objs = dict(map(tuple, spec["objects"]))
        phi0 = [_lookup(oid, _lookup(objs, o, "object image of", where + "/objects"), "object", where + "/objects")
                for o in dom.objects]
        f = GroupoidFunctor(dom, cod, phi0, phi1, name=name)
    else:
        f = GroupoidFunctor.from_arrow_map(dom, cod, phi1, name=name)
    viol = validate_functor(f)
    if viol:
        raise WorkspaceError("validation", f"functor axiom fails: {viol[0]}", where)
    return f


def _build_bibundle(ws: Workspace, name, spec, where) -> Bibundle:
    if "canonical" in spec:
        b = canonical_bibundle(ws.groupoid(spec["canonical"]))
    elif "from_functor" in spec:
        b = bibundle_from_functor(_lookup(ws.functors, spec["from_functor"], "functor", where))
    elif "reverse" in spec:
        b = reverse_bibundle(_lookup(ws.bibundles, spec["reverse"], "bibundle", where))
    else:
        G, H = ws.groupoid(spec["left"]), ws.groupoid(spec["right"])
        carrier = spec["carrier"]
        _unique(carrier, where + "/carrier")
        mid = {m: i for i, m in enumerate(carrier)}
        gobj = {o: i for i, o in enumerate(G.objects)}
        hobj = {o: i for i, o in enumerate(H.objects)}
        gar = {a: i for i, a in enumerate(G.arrows)}
        har = {a: i for i, a in enumerate(H.arrows)}
        tau = dict(map(tuple, spec["tau"]))
        sigma = dict(map(tuple, spec["sigma"]))
        tau_ids = [_lookup(gobj, _lookup(tau, m, "tau of", where + "/tau"), "object", where + "/tau")
                   for m in carrier]
        sigma_ids = [_lookup(hobj, _lookup(sigma, m, "sigma of", where + "/sigma"), "object", where + "/sigma")
                     for m in carrier]
        lact = -np.ones((G.n_arrows, len(carrier)), dtype=np.int64)
        ract = -np.ones((len(carrier), H.n_arrows), dtype=np.int64)
        w = where + "/left_action"
        for x, m, xm in spec["left_action"]:
            lact[_lookup(gar, x, "arrow", w), _lookup(mid, m, "carrier element", w)] = _lookup(
                mid, xm, "carrier element", w)
        w = where + "/right_action"
        for m, h, mh in spec["right_action"]:
            ract[_lookup(mid, m, "carrier element", w), _lookup(har, h, "arrow", w)] = _lookup(
                mid, mh, "carrier element", w)
        b = Bibundle(G, H, tuple(carrier), tau_ids, sigma_ids, lact, ract)
    b = Bibundle(b.left, b.right, b.carrier, b.tau, b.sigma, b.lact, b.ract, name=name)
    viol = validate_bibundle(b, check_principal=False)
    if viol:
        raise WorkspaceError("validation", f"bibundle axiom fails: {viol[0]}", where)
    return b


def parse_workspace(text: str, path: str | None = None) -> Workspace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkspaceError("syntax", exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    validator = jsonschema.Draft202012Validator(workspace_schema())
    # best_match descends into oneOf branches, so the pointer lands on the offending entry
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise WorkspaceError("schema", err.message, _pointer(err.absolute_path))
    doc = normalize(doc)
    ws = Workspace(doc, path=path)
    for name, spec in doc["groupoids"].items():
        ws.groupoids[name] = _build_groupoid(name, spec, _pointer(["groupoids", name]))
    for name, spec in doc["measures"].items():
        where = _pointer(["measures", name])
        if name not in ws.groupoids and builtin_groupoid(name) is None:
            raise WorkspaceError("reference", f"measure for unknown groupoid {name!r}", where)
        ws.measures[name] = _build_measure(ws.groupoid(name), spec, where)
    for name, spec in doc["functors"].items():
        ws.functors[name] = _build_functor(ws, name, spec, _pointer(["functors", name]))
    pending = dict(doc["bibundles"])
    while pending:
        ready = [n for n, spec in pending.items() if spec.get("reverse") not in pending]
        if not ready:
            raise WorkspaceError("reference", "bibundles reverse each other in a cycle", "/bibundles")
        for name in ready:
            ws.bibundles[name] = _build_bibundle(ws, name, pending.pop(name), _pointer(["bibundles", name]))
    ws.jobs = dict(doc["jobs"])
    return ws


def load_workspace(path) -> Workspace:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise WorkspaceError("io", str(exc), str(p)) from None
    return parse_workspace(text, str(p))
