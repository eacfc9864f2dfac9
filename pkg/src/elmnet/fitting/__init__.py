from .decay import FitResult, aicc, fit_decay, model_predict, select_model
from .joint import ExperimentSpec, JointFitResult, joint_theory_fit
from .optimizers import OptResult, differential_evolution, nelder_mead
from .spectrum import (BootstrapBeta, SpectrumModel, bootstrap_beta,
                       covariance_spectrum, fit_spectrum)

__all__ = [
    "FitResult", "aicc", "fit_decay", "model_predict", "select_model",
    "ExperimentSpec", "JointFitResult", "joint_theory_fit", "OptResult",
    "differential_evolution", "nelder_mead", "BootstrapBeta",
    "SpectrumModel", "bootstrap_beta", "covariance_spectrum", "fit_spectrum",
]
