"""Stewart platform kinematics and least-squares pose calibration."""
from .calibration import (AffineCorrection, CalibrationDataset, CompensationModel,
                          PoseObservation, compensate_option1, compensate_option2,
                          compensate_option3, detect_outliers, error_vector, filter_workspace,
                          fit_affine, fit_model, predict)
from .config import load_geometry, load_scenario, reference_geometry
from .dh import DHChain, DHRow, chain_forward, extract_dh_chain, unify_positions
from .geometry import (PlatformGeometry, PoseBounds, PoseVector, RigidTransform,
                       grip_to_platform, pose_to_transform, transform_to_pose)
from .kinematics import (LegLengths, forward_kinematics, inverse_kinematics, is_singular,
                         jacobian, normalized_determinant)
from .metrics import ErrorReport, build_report, error_range, improvement_pct, rmse_magnitude
from .simulator import (NoiseSpec, PerturbationSpec, build_dataset, generate_random_poses,
                        perturb_geometry, simulate_measurement)

__version__ = "0.1.0"
