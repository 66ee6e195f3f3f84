"""Homogeneous affine surfaces: catalog, verification, flows, geodesics."""

__version__ = "0.1.0"
