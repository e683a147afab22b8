"""Quad-dominant simplification of hybrid triangle/quad meshes via single
edge collapse, with symmetry- and joint-aware edge weighting and a sampled
Chamfer/Hausdorff evaluation harness."""

from .attributes import (
    AttributeFunctional,
    AttributeSet,
    SkeletonPose,
    finalize_influences,
    fit_attribute_functional,
    lbs_pose,
    merge_joint_functionals,
)
from .decimate import DecimationConfig, DecimationResult, approx_equal, decimate
from .edge_weight import (
    EdgeWeightInputs,
    batch_edge_weights,
    combined_weight,
    dihedral_weight,
    joint_distance,
)
from .mesh import (
    CollapseOutcome,
    Mesh,
    MeshError,
    build_mesh,
    collapse_edge,
    collapse_is_valid,
    edge_key,
    face_normal_area,
    opposing_edges,
    total_triangle_count,
)
from .mesh_io import (
    MeshIOError,
    Skeleton,
    SkinSidecar,
    attach_skin,
    read_obj,
    read_skin_sidecar,
    write_obj,
    write_skin_sidecar,
)
from .metrics import (
    MetricReport,
    animated_metrics,
    chamfer,
    hausdorff,
    metric_report,
    quad_stats,
    sample_surface,
)
from .quadric import Quadric, collapse_cost, face_quadric, optimal_position, plane_quadric
from .symmetry import (
    SymmetryConfig,
    all_symmetry_weights,
    edge_symmetry_plane,
    symmetry_weight,
    symmetry_weight_brute_force,
)
from .synth import grid, skinned_cylinder, subdivided_cube, synth_mesh

__version__ = "0.1.0"
