"""Sensor-selection toolkit for 3D TOA/RSS wireless positioning.

Core surface: scene construction (:mod:`sensorsel.scene`), the bound kernels
in trace and fractional form (:mod:`sensorsel.crlb`), greedy and exhaustive
dynamic selection (:mod:`sensorsel.dynamic`), worst-case robust selection
(:mod:`sensorsel.robust`, :mod:`sensorsel.dcp`, :mod:`sensorsel.dmo`), a
measurement/estimator simulator (:mod:`sensorsel.positioning`), and the
experiment harness behind the ``select`` CLI (:mod:`sensorsel.harness`).
"""

from .crlb import (
    CrlbValue,
    crlb_fractional,
    crlb_trace,
    fim,
    marginal_reduction,
    pair_term,
    sherman_morrison_update,
    svr_decompose,
    triplet_term,
)
from .dcp import DcpResult, dcp
from .dmo import DmoResult, dmo
from .dynamic import (
    DegenerateSceneError,
    EnumerationCapError,
    SelectionResult,
    bof,
    exhaustive_dynamic,
    gss_f,
    gss_t,
    op_count_model,
)
from .harness import run_dynamic_suite, run_robust_suite, verify
from .positioning import (
    Estimate,
    MeasurementSet,
    MseResult,
    measurement_covariance,
    mse_eval,
    simulate_measurements,
    taylor_ls_estimate,
)
from .robust import (
    WorstCase,
    exhaustive_robust,
    ico,
    is_binary,
    relaxed_solve,
    round_top_m,
    worst_case_crlb,
)
from .scene import (
    NoiseModel,
    Scene,
    SensorSpec,
    SensorTargetGeometry,
    default_noise,
    geometry,
    grid_geometry,
    prism_scene,
    random_scene,
    scene_from_dict,
    scene_to_dict,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
