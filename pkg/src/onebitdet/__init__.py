"""One-bit likelihood-ratio detection of Markovian block-sparse signals."""

__version__ = "0.1.0"

from .analysis import (AltMoments, NullMoments, PairJointProbs, TheorySummary, alt_moments,
                       null_moments, pair_joint_probs, pd_theoretical, pfa_theoretical,
                       q_function, q_inverse, theory, threshold_for_pfa)
from .detector import (DetectionResult, DetectorCoeffs, agreement_sequence, detect,
                       detector_coeffs, statistic, threshold)
from .errors import NumericalError, ValidationError
from .model import ModelParams, observe, default_params, snr_db, noise_std_for_snr
from .orthant import OrthantSpec, orthant, orthant2, orthant_probability
from .simulator import (ExperimentConfig, Perturbation, PowerCurve, RocCurve, TrialBatch,
                        empirical_roc, power_function, roc_sweep, run_trials, sensitivity_sweep)

__all__ = [
    "AltMoments", "DetectionResult", "DetectorCoeffs", "ExperimentConfig", "ModelParams",
    "NullMoments", "NumericalError", "OrthantSpec", "PairJointProbs", "Perturbation",
    "PowerCurve", "RocCurve", "TheorySummary", "TrialBatch", "ValidationError",
    "agreement_sequence", "alt_moments", "detect", "detector_coeffs", "empirical_roc",
    "noise_std_for_snr", "null_moments", "observe", "orthant", "orthant2",
    "orthant_probability", "pair_joint_probs", "default_params", "pd_theoretical",
    "pfa_theoretical", "power_function", "q_function", "q_inverse", "roc_sweep",
    "run_trials", "sensitivity_sweep", "snr_db", "statistic", "theory", "threshold",
    "threshold_for_pfa",
]
