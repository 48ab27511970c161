"""Finite groupoids, their convolution algebras, correspondences and Hilbert bimodules.

The submodules follow the construction bottom-up: ``groupoid`` and
``measure`` hold the combinatorial and measure data, ``algebra`` the
convolution algebra and its regular representations, ``correspondence``
the W*-side functor, ``bibundle`` and ``bimodule`` the C*-side functor and
Morita witnesses, ``workspace`` and ``cli`` the file format and driver.
"""

from .algebra import generate_algebra, regular_representation, summarize_algebra, wedderburn
from .bibundle import (Bibundle, bibundle_from_functor, bibundle_isomorphic, bibundle_tensor, canonical_bibundle,
                       induced_measure, reverse_bibundle, validate_bibundle)
from .bimodule import (BimoduleSpace, bimodule_intertwiner, bimodule_unitary, build_bimodule, canonical_bimodule,
                       interior_tensor, morita_decide)
from .correspondence import build_correspondence, fusion_intertwiner, relative_tensor, unit_law_check
from .errors import ConsistencyError, StructureError, Violation
from .groupoid import (FiniteGroupoid, GroupoidFunctor, action_groupoid, group_groupoid, pair_groupoid,
                       random_functor, random_groupoid, unit_groupoid, validate_groupoid)
from .measure import MeasuredGroupoid, counting_measured, random_measured

__version__ = "0.1.0"
