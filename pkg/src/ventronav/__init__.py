"""Hardware-independent ventriculostomy navigation engine and simulation workbench."""

from .acquisition import (
    AcquisitionSample,
    NoiseModel,
    VirtualScene,
    acquire_landmark,
    aim_camera,
    simulate_session,
)
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    MarkerPose,
    Ray,
    RigidTransform,
    Rotation,
    SimilarityTransform,
    TriangleMesh,
)
from .guidance import (
    CatheterModel,
    EntryPoint,
    TipFeedback,
    TrajectoryPlan,
    catheter_tip,
    compute_tre,
    place_entry_point,
    tip_feedback,
)
from .landmarks import LANDMARK_ORDER, LandmarkId, LandmarkSet
from .registration import (
    IcpConfig,
    RegistrationResult,
    aggregate_repeated_picks,
    compute_rmse,
    detect_degeneracy,
    estimate_similarity,
    fit_similarity,
    icp_refine,
)

__version__ = "0.1.0"
