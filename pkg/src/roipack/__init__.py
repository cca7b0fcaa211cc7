"""roipack: ROI-packing image compression for machine vision.

Detected regions are padded, merged via convex hulls, aligned to a
coding grid, decomposed into rectangles, optionally downscaled and bin
packed into a minimal frame, which is then compressed and serialized
into a self-describing ``.roip`` container.  Decoding reverses the
layout to produce a spatially aligned reconstruction.  Bjøntegaard
rate/metric deltas are included for codec comparisons.
"""

__version__ = "0.1.0"

from .container import RoipContainer, parse, read_file, serialize, write_file
from .metrics import RateCurve, bd_metric, bpp, psnr
from .pipeline import PipelineConfig, decode_container, encode_image, roundtrip_report
from .regions import load_detections

__all__ = [
    "__version__",
    "RoipContainer",
    "parse",
    "serialize",
    "read_file",
    "write_file",
    "RateCurve",
    "bd_metric",
    "bpp",
    "psnr",
    "PipelineConfig",
    "encode_image",
    "decode_container",
    "roundtrip_report",
    "load_detections",
]
