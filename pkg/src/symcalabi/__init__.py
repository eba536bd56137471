"""Stable 3-forms, the symplectic codifferential, and a Newton–Krylov solver
for the scalar deformation equation of a holomorphic volume form on T⁶."""

from .exterior import KForm, MultiIndex, SymplecticFrame, holomorphic_volume, interior, pairing_ratio, star_s, wedge
from .fields import FormField, Grid, d_c, d_s, deform, ext_d, read_hxf, write_hxf
from .stable3 import analyze, classify, duality_defect
from .equation import (
    diagnose,
    expansion_oracle,
    local_poly,
    normalize_F,
    residual,
    residual_nonscalar,
    standard_omega,
)
from .solver import SolveOptions, jvp, solve

__version__ = "0.1.0"
