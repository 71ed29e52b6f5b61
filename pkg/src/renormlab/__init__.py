"""Renormalization and KAM linearization of analytic circle maps near rotations."""
from . import annulus, cfrac, circle, herman2d, linearize, renorm
from .annulus import AnnulusLift, StripFunction
from .circle import RotationEstimate, arnold, rotation_number

__all__ = ["annulus", "cfrac", "circle", "herman2d", "linearize", "renorm",
           "AnnulusLift", "StripFunction", "RotationEstimate", "arnold", "rotation_number"]
__version__ = "0.1.0"
