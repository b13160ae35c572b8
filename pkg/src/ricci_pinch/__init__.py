"""Numerical laboratory for curvature pinching under Ricci flow."""
from .curvature import CurvDecomp, TwoFormOperator, curvature_at, decompose, isotropic_min, weitzenbock
from .flow import FlowControls, Trajectory, classify, dilate, integrate
from .geometry import (ConstantCurvature, CoordinateChart, MilnorFrame3D, ProductOfSpheres,
                       WarpedProductSphere)
from .pinching import PinchConfig, build_trace, check_pinching_estimate, phi_bound
from .tensors import AlgCurvTensor, MetricPoint, Sym2Tensor, curv_inner, kn_product

__version__ = "0.1.0"

__all__ = [
    "AlgCurvTensor", "ConstantCurvature", "CoordinateChart", "CurvDecomp", "FlowControls",
    "MetricPoint", "MilnorFrame3D", "PinchConfig", "ProductOfSpheres", "Sym2Tensor", "Trajectory",
    "TwoFormOperator", "WarpedProductSphere", "build_trace", "check_pinching_estimate", "classify",
    "curv_inner", "curvature_at", "decompose", "dilate", "integrate", "isotropic_min", "kn_product",
    "phi_bound", "weitzenbock",
]
