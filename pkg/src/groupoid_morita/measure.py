"""Haar systems, base measures and the modular function on finite groupoids.

All weights are exact ``Fraction`` values.  On a finite groupoid a Haar
system is a positive weight on arrows with ``weight(x*y) == weight(y)``
whenever the product is defined; the measure on arrows is
``nu(x) = base(tgt x) * weight(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import StructureError, Violation
from .groupoid import FiniteGroupoid, GroupoidFunctor, orbits

__all__ = [
    "HaarSystem",
    "MeasuredGroupoid",
    "ModularData",
    "counting_haar",
    "haar_from_source_weights",
    "validate_haar",
    "modular",
    "measured_functor_check",
    "FunctorMeasureReport",
    "counting_measured",
    "random_measured",
]


def _fractions(values) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class HaarSystem:
    """Arrow weights; the measure on the t-fiber over u is the restriction to it."""

    weight: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weight", _fractions(self.weight))


def counting_haar(g: FiniteGroupoid) -> HaarSystem:
    return HaarSystem((Fraction(1),) * g.n_arrows)


def haar_from_source_weights(g: FiniteGroupoid, c: Sequence) -> HaarSystem:
    """The Haar system ``weight(x) = c(src x)``.

    Left invariance forces weight(y) = weight(y^-1 y) = weight(unit(src y)),
    so every Haar system on a finite groupoid has this form.
    """
    c = _fractions(c)
    return HaarSystem(tuple(c[s] for s in g.src))


@dataclass(frozen=True, eq=False)
class MeasuredGroupoid:
    g: FiniteGroupoid
    haar: HaarSystem
    base: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "base", _fractions(self.base))
        if len(self.haar.weight) != self.g.n_arrows or len(self.base) != self.g.n_objects:
            raise StructureError("measure tables do not match the groupoid")
        if min(self.haar.weight) <= 0 or min(self.base) <= 0:
            raise StructureError("Haar weights and base weights must be strictly positive")

    @property
    def weight(self) -> tuple[Fraction, ...]:
        return self.haar.weight

    @cached_property
    def nu(self) -> tuple[Fraction, ...]:
        """The measure on arrows integrated against the base measure."""
        return tuple(self.base[t] * w for t, w in zip(self.g.tgt, self.haar.weight))

    @cached_property
    def modular(self) -> "ModularData":
        return modular(self)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.haar.weight])

    @cached_property
    def nu_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.nu])

    @cached_property
    def delta_array(self) -> np.ndarray:
        return np.array([float(d) for d in self.modular.delta])

    def total_mass(self) -> Fraction:
        return sum(self.nu, Fraction(0))

    def rescaled(self, base_factors: Sequence) -> "MeasuredGroupoid":
        """Same Haar system, base measure multiplied pointwise (same measure class)."""
        return MeasuredGroupoid(self.g, self.haar, tuple(b * Fraction(s) for b, s in zip(self.base, base_factors)))

    def __repr__(self):
        return f"<MeasuredGroupoid over {self.g!r}>"


def counting_measured(g: FiniteGroupoid) -> MeasuredGroupoid:
    """Counting Haar system and uniform unit base measure."""
    return MeasuredGroupoid(g, counting_haar(g), (Fraction(1),) * g.n_objects)


def _random_fraction(rng, max_num=5, max_den=4) -> Fraction:
    return Fraction(int(rng.integers(1, max_num + 1)), int(rng.integers(1, max_den + 1)))


def random_measured(g: FiniteGroupoid, rng: np.random.Generator) -> MeasuredGroupoid:
    c = [_random_fraction(rng) for _ in range(g.n_objects)]
    base = [_random_fraction(rng) for _ in range(g.n_objects)]
    return MeasuredGroupoid(g, haar_from_source_weights(g, c), base)


def validate_haar(mg: MeasuredGroupoid) -> list[Violation]:
    g, w = mg.g, mg.haar.weight
    out = [Violation("positivity", (g.arrows[x],)) for x in range(g.n_arrows) if w[x] <= 0]
    for x, y, xy in g.composable_pairs:
        if w[xy] != w[y]:
            out.append(Violation("left invariance", (g.arrows[x], g.arrows[y])))
    return out


@dataclass(frozen=True)
class ModularData:
    """``delta[x] = nu(x) / nu(x^-1)``."""

    delta: tuple[Fraction, ...]

    def violations(self, g: FiniteGroupoid) -> list[Violation]:
        d = self.delta
        out = []
        for x, y, xy in g.composable_pairs:
            if d[xy] != d[x] * d[y]:
                out.append(Violation("multiplicativity", (g.arrows[x], g.arrows[y])))
        for u in range(g.n_objects):
            if d[g.unit[u]] != 1:
                out.append(Violation("unit", (g.objects[u],)))
        for x in range(g.n_arrows):
            if d[g.inv[x]] * d[x] != 1:
                out.append(Violation("inverse", (g.arrows[x],)))
        return out


def modular(mg: MeasuredGroupoid) -> ModularData:
    nu = mg.nu
    return ModularData(tuple(nu[x] / nu[ix] for x, ix in enumerate(mg.g.inv)))


@dataclass(frozen=True)
class FunctorMeasureReport:
    violations: tuple[Violation, ...]
    pushed_mass: dict
    target_mass: dict
    ratio: dict

    @property
    def ok(self) -> bool:
        return not self.violations


def measured_functor_check(f: GroupoidFunctor, dom: MeasuredGroupoid, cod: MeasuredGroupoid) -> FunctorMeasureReport:
    """Push the orbit-space base measure of ``dom`` forward and compare with ``cod``'s.

    Orbits are keyed by their basepoint label.  Absolute continuity fails
    only if some target orbit has zero mass but receives positive mass.
    """
    if f.dom is not dom.g or f.cod is not cod.g:
        raise ValueError("functor does not match the measured groupoids")
    H = cod.g
    h_orbit = {}
    target = {}
    for orb in orbits(H):
        key = H.objects[orb.base]
        target[key] = sum((cod.base[u] for u in orb.members), Fraction(0))
        for u in orb.members:
            h_orbit[u] = key
    pushed = {k: Fraction(0) for k in target}
    for orb in orbits(dom.g):
        mass = sum((dom.base[u] for u in orb.members), Fraction(0))
        pushed[h_orbit[int(f.phi0[orb.base])]] += mass
    viol = tuple(Violation("absolute continuity", (k,)) for k in target if target[k] == 0 and pushed[k] > 0)
    ratio = {k: pushed[k] / target[k] for k in target if target[k] > 0}
    return FunctorMeasureReport(viol, pushed, target, ratio)
