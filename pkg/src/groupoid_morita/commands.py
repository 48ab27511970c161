"""One function per CLI command.

Each runner takes a workspace, the operand names and the run options and
returns ``(passed, certificates)`` where certificates is a JSON-ready dict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .algebra import summarize_algebra
from .bibundle import bibundle_isomorphic, bibundle_tensor, canonical_bibundle, validate_bibundle
from .bimodule import algebraic_violations, bimodule_intertwiner, build_bimodule, gram_operator, morita_decide
from .correspondence import build_correspondence, fusion_intertwiner, unit_law_check
from .errors import ConsistencyError
from .groupoid import identity_functor, validate_functor, validate_groupoid
from .measure import measured_functor_check, validate_haar
from .workspace import Workspace, WorkspaceError

COMMANDS = ("validate", "algebra", "wedderburn", "correspondence", "fuse", "bimodule", "compose",
            "verify-w-functor", "verify-c-functor", "morita")

ARITY = {"algebra": 1, "wedderburn": 1, "correspondence": 1, "fuse": 2, "bimodule": 1, "compose": 2,
         "morita": 2}


@dataclass(frozen=True)
class Options:
    tolerance: float = linalg.DEFAULT_TOL
    seed: int = 0
    exact: bool = False


def jsonable(v):
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if v is None or isinstance(v, str):
        return v
    return str(v)


def run_validate(ws: Workspace, names, opt: Options):
    certs = {"groupoids": {}, "measures": {}, "functors": {}, "bibundles": {}}
    ok = True
    for name, g in ws.groupoids.items():
        v = validate_groupoid(g)
        ok &= not v
        certs["groupoids"][name] = {"objects": g.n_objects, "arrows": g.n_arrows, "violations": list(map(str, v))}
    for name, mg in ws.measures.items():
        v = validate_haar(mg) + mg.modular.violations(mg.g)
        ok &= not v
        certs["measures"][name] = {"violations": list(map(str, v))}
    for name, f in ws.functors.items():
        v = validate_functor(f)
        rep = measured_functor_check(f, ws.measured(_gname(ws, f.dom)), ws.measured(_gname(ws, f.cod)))
        ok &= not v and rep.ok
        certs["functors"][name] = {"violations": list(map(str, v + list(rep.violations)))}
    for name, b in ws.bibundles.items():
        v = validate_bibundle(b, check_principal=False)
        ok &= not v
        certs["bibundles"][name] = {"size": b.size, "violations": list(map(str, v)),
                                    "left_principal": not validate_bibundle(b)}
    return ok, certs


def _gname(ws: Workspace, g) -> str:
    return ws._name_of(g)


def run_algebra(ws: Workspace, names, opt: Options):
    mg = ws.measured(names[0])
    s = summarize_algebra(mg, opt.seed, opt.tolerance)
    certs = {"arrows": mg.g.n_arrows, "dimension": s.dimension, "center_dim": s.center_dim,
             "commutative": s.commutative, "faithful": s.dimension == mg.g.n_arrows}
    return s.dimension == mg.g.n_arrows, certs


def run_wedderburn(ws: Workspace, names, opt: Options):
    mg = ws.measured(names[0])
    s = summarize_algebra(mg, opt.seed, opt.tolerance)
    dims = sum(b * b for b in s.blocks)
    certs = {"dimension": s.dimension, "blocks": list(s.blocks), "multiplicities": list(s.multiplicities),
             "center_dim": s.center_dim}
    return dims == s.dimension and len(s.blocks) == s.center_dim, certs


def _correspondence_certs(ws: Workspace, f, opt: Options):
    dom, cod = ws.measured(_gname(ws, f.dom)), ws.measured(_gname(ws, f.cod))
    c = build_correspondence(f, dom, cod)
    star_l = max((linalg.max_abs(c.left[f.dom.inv[x]] - c.left[x].conj().T) for x in range(f.dom.n_arrows)),
                 default=0.0)
    star_r = max((linalg.max_abs(c.right[f.cod.inv[h]] - c.right[h].conj().T) for h in range(f.cod.n_arrows)),
                 default=0.0)
    comm = max((linalg.max_abs(a @ b - b @ a) for a in c.left for b in c.right), default=0.0)
    certs = {"dim": c.dim, "left_star": star_l, "right_star": star_r, "commute": comm}
    return max(star_l, star_r, comm) <= opt.tolerance, certs


def run_correspondence(ws: Workspace, names, opt: Options):
    return _correspondence_certs(ws, ws.functor(names[0]), opt)


def _fuse(ws: Workspace, f1, f2, opt: Options):
    if f1.cod is not f2.dom:
        raise WorkspaceError("reference", f"functors {f1.name!r} and {f2.name!r} are not composable")
    ms = [ws.measured(_gname(ws, g)) for g in (f1.dom, f1.cod, f2.cod)]
    rep = fusion_intertwiner(f1, f2, *ms, tol=opt.tolerance)
    return rep.passed, rep.to_dict()


def run_fuse(ws: Workspace, names, opt: Options):
    return _fuse(ws, ws.functor(names[0]), ws.functor(names[1]), opt)


def run_bimodule(ws: Workspace, names, opt: Options):
    b = ws.bibundle(names[0])
    principal = not validate_bibundle(b)
    if not principal:
        return False, {"left_principal": False}
    mG, mH = ws.measured(_gname(ws, b.left)), ws.measured(_gname(ws, b.right))
    e = build_bimodule(b, mG, mH, exact=opt.exact, check=False)
    lo = float(np.linalg.eigvalsh(gram_operator(e)).min())
    viol = algebraic_violations(e, opt.tolerance)
    alg_ok = all(v == 0 if opt.exact else v <= opt.tolerance for v in viol.values())
    certs = {"left_principal": True, "dim": e.dim, "gram_min_eigenvalue": lo,
             "identities": {k: ("exact" if opt.exact and v == 0 else v) for k, v in viol.items()}}
    return lo >= -opt.tolerance and alg_ok, certs


def _compose(ws: Workspace, b1, b2, opt: Options):
    if b1.right is not b2.left:
        raise WorkspaceError("reference", f"bibundles {b1.name!r} and {b2.name!r} are not composable")
    ms = [ws.measured(_gname(ws, g)) for g in (b1.left, b1.right, b2.right)]
    rep = bimodule_intertwiner(b1, b2, *ms, exact=opt.exact, tol=opt.tolerance)
    d = rep.to_dict()
    if opt.exact:
        for k in ("isometry", "balanced", "left", "right"):
            d[k] = "exact" if d[k] == 0 else f"{int(d[k])} failing entries"
        d["tolerance"] = "exact"
    return rep.passed, d


def run_compose(ws: Workspace, names, opt: Options):
    return _compose(ws, ws.bibundle(names[0]), ws.bibundle(names[1]), opt)


def run_verify_w(ws: Workspace, names, opt: Options):
    """Correspondence certificates per functor, the unit law on identities and fusion on consecutive pairs."""
    fs = [ws.functor(n) for n in names] if names else list(ws.functors.values())
    ok, certs = True, {"functors": {}, "unit_laws": {}, "fusions": {}}
    for f in fs:
        passed, c = _correspondence_certs(ws, f, opt)
        ok &= passed
        certs["functors"][f.name] = c
        if f == identity_functor(f.dom):
            rep = unit_law_check(ws.measured(_gname(ws, f.dom)), opt.tolerance)
            ok &= rep.passed
            certs["unit_laws"][f.name] = rep.to_dict()
    for f1, f2 in zip(fs, fs[1:]):
        if f1.cod is f2.dom:
            passed, c = _fuse(ws, f1, f2, opt)
            ok &= passed
            certs["fusions"][f"{f1.name}.{f2.name}"] = c
    return ok, certs


def run_verify_c(ws: Workspace, names, opt: Options):
    """Bimodule certificates per bibundle, both unit laws (exact) and the composition certificate on consecutive pairs."""
    bs = [ws.bibundle(n) for n in names] if names else list(ws.bibundles.values())
    ok, certs = True, {"bibundles": {}, "unit_laws": {}, "compositions": {}}
    exact = Options(opt.tolerance, opt.seed, True)
    for b in bs:
        passed, c = run_bimodule(ws, [b.name], opt)
        ok &= passed
        certs["bibundles"][b.name] = c
        if not c["left_principal"]:
            continue
        laws = {}
        for tag, pair in (("left", (canonical_bibundle(b.left), b)), ("right", (b, canonical_bibundle(b.right)))):
            p, d = _compose(ws, *pair, exact)
            iso = bibundle_isomorphic(bibundle_tensor(*pair)[0], b) is not None
            laws[tag] = {"intertwiner": d, "isomorphic_to_original": iso}
            ok &= p and iso
        certs["unit_laws"][b.name] = laws
    for b1, b2 in zip(bs, bs[1:]):
        if b1.right is b2.left and not validate_bibundle(b1) and not validate_bibundle(b2):
            passed, c = _compose(ws, b1, b2, opt)
            ok &= passed
            certs["compositions"][f"{b1.name}.{b2.name}"] = c
    return ok, certs


def run_morita(ws: Workspace, names, opt: Options):
    g, h = ws.groupoid(names[0]), ws.groupoid(names[1])
    v = morita_decide(g, h, seed=opt.seed, tol=opt.tolerance)
    certs = v.to_dict()
    if v.equivalent:
        certs["witness"]["left_principal"] = not validate_bibundle(v.witness)
    # like cmp(1): the exit status answers the question, an obstruction is a certified "no"
    return v.equivalent, certs


RUNNERS = {
    "validate": run_validate,
    "algebra": run_algebra,
    "wedderburn": run_wedderburn,
    "correspondence": run_correspondence,
    "fuse": run_fuse,
    "bimodule": run_bimodule,
    "compose": run_compose,
    "verify-w-functor": run_verify_w,
    "verify-c-functor": run_verify_c,
    "morita": run_morita,
}


def run_job(command: str, ws: Workspace, names, opt: Options):
    """Run one job; a ConsistencyError becomes a failing result carrying the message."""
    arity = ARITY.get(command)
    if arity is not None and len(names) != arity:
        raise WorkspaceError("usage", f"{command} takes {arity} operand(s), got {len(names)}")
    try:
        passed, certs = RUNNERS[command](ws, list(names), opt)
    except ConsistencyError as exc:
        return False, {"error": str(exc)}
    return bool(passed), jsonable(certs)
