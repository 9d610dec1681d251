"""Exact Dunkl-operator algebra and cyclotomic Bessel functions."""

from .scalars import CycRat, ExponentExpr, ParamPoly, compute_C, compute_a_b, compute_sigma_t
from .opalg import GroupElement, Operator, apply, op_mul
from .dunkl import FROZEN_CONVENTION, Convention, DunklParams, build_dunkl

__version__ = "0.1.0"
