"""View planning for tabletop object capture.

Predict how many views an object needs, spread that many views over a
hemisphere by maximizing their minimum pairwise angle, and plan the
shortest visiting path from the zenith view around the object.
"""

from .curvefit import (DEFAULT_ALPHA, FittedCurve, PsnrSample, ViewCountLabel,
                       curve_eval, fit_curve, required_views, synth_curve)
from .errors import (FitFailureError, FormatError, ImageDecodeError,
                     InvalidArgumentError, TooLargeError)
from .features import ImageFeatureExtractor, extract_features, image_features
from .geometry import (ViewPose, ViewSpace, candidate_grid, initial_views,
                       load_view_space, look_at_pose, min_pairwise_angle,
                       save_view_space, top_view)
from .pathplan import (ObstacleSphere, PathPlan, build_cost_matrix,
                       hamiltonian_path_exact, hamiltonian_path_heuristic,
                       local_path, plan_global_path)
from .predict import (Prediction, RegressorModel, ViewCountRegressor,
                      predict_oracle, predict_regressor, predict_statistic,
                      train_regressor)
from .simulate import (SyntheticObject, compare, gen_images, gen_object,
                       load_config, quality_model, run_strategy)
from .tables import ViewSpaceTable, build_table, load_table, save_table
from .tammes import tammes_hemisphere

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ALPHA", "FittedCurve", "PsnrSample", "ViewCountLabel",
    "curve_eval", "fit_curve", "required_views", "synth_curve",
    "FitFailureError", "FormatError", "ImageDecodeError",
    "InvalidArgumentError", "TooLargeError",
    "ImageFeatureExtractor", "extract_features", "image_features",
    "ViewPose", "ViewSpace", "candidate_grid", "initial_views",
    "load_view_space", "look_at_pose", "min_pairwise_angle",
    "save_view_space", "top_view",
    "ObstacleSphere", "PathPlan", "build_cost_matrix",
    "hamiltonian_path_exact", "hamiltonian_path_heuristic",
    "local_path", "plan_global_path",
    "Prediction", "RegressorModel", "ViewCountRegressor",
    "predict_oracle", "predict_regressor", "predict_statistic",
    "train_regressor",
    "SyntheticObject", "compare", "gen_images", "gen_object",
    "load_config", "quality_model", "run_strategy",
    "ViewSpaceTable", "build_table", "load_table", "save_table",
    "tammes_hemisphere",
    "__version__",
]
