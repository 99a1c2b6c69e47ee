"""Discrete-continuous triangular color palettes.

A sail is a wind-deformable Bezier triangle in RGB space decoding to an
ordered discrete color set; rigs pair sails with soft image regions and a
frozen pixel mapping so editing a sail recolors the image deterministically.
"""

from .alpha import (
    AlphaField,
    RigConfig,
    RigFit,
    fit_rig,
    fit_with_masks,
    reconstruct,
    select_n_alpha,
    tempered_softmax,
    tv_penalty,
)
from .colorimetry import (
    ColorHistogram,
    EmptyDistributionError,
    LabColor,
    build_histogram,
    colorfulness,
    hardness_label,
    histogram_entropy,
    patchmax_histogram,
    sail_histogram,
    srgb_to_lab,
)
from .fit import FitConfig, FitResult, NumericalError, fit_sail, init_sail, sweep_subdivision
from .metrics import FitLoss, combined_loss, e_kl, e_l2, r_percent
from .render import render_sail
from .rig import (
    EditDelta,
    RigDimensionError,
    RigError,
    RigFileError,
    RigVersionError,
    SailRig,
    build_mapping,
    load_rig,
    quantize_u8,
    recolor,
    remap_subdivision,
    save_rig,
)
from .sail import (
    ColorSail,
    ControlNet,
    DecodedSail,
    GridPoint,
    InvalidSubdivisionError,
    bernstein_basis,
    control_points,
    decode,
    decode_jacobian,
    enumerate_grid,
    grid_barycentrics,
)

__version__ = "0.1.0"
