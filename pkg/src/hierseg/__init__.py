"""hierseg: hierarchical region segmentation from contour and orientation maps.

Contour-strength maps and K-bin orientation responses go in; sparse boundary
representations, oriented-watershed hierarchies (ultrametric contour maps)
and orientation evaluations come out. Hot kernels run on a compiled core
when available, with a pure numpy/scipy fallback selected at import.
"""

from ._kernels import backend_name
from .errors import ContractError, FormatError
from .raster import (
    BinStack,
    BoundaryGrid,
    ContourMap,
    LabelMap,
    OrientationMap,
    load_bin_stack,
    read_pfm,
    read_pgm,
    resample_nearest,
    write_pfm,
    write_pgm,
)
from .sparse_boundaries import (
    BoundarySegment,
    SparseBoundaries,
    erase_segment,
    from_boundary_grid,
    from_label_map,
    set_strength,
    to_boundary_grid,
)
from .hierarchy import (
    Merge,
    RegionHierarchy,
    build_ucm,
    combine_multiscale,
    owt_reweight,
    threshold,
    to_ucm_grid,
    watershed,
)
from .orientation import (
    BinSpec,
    GtOrientationLabels,
    PolygonChain,
    assign_gt_orientations,
    bin_confidence,
    decode_orientation,
    eval_orientation,
    local_gradient_orientation,
    simplify_to_polygons,
)
from .fusion import (
    FusionWeights,
    SideActivations,
    bilinear_resample,
    class_balanced_loss,
    class_balanced_loss_grad,
    fuse_sides,
)

__version__ = "0.1.0"
