"""Maximally robust linear classifiers: implicit bias, regularization, attacks and certificates."""
from .attack import AttackSpec, Perturbation, band_mask, complex_linf_project, fourier_linf_step
from .errors import (
    CertificationError,
    DatasetFormatError,
    InfeasibleError,
    InvalidInputError,
    MaxRobustError,
    StepSizeError,
    SymmetryError,
)
from .models import ConvParams, LinearParams, LossKind, effective_weight, forward, margin, risk, risk_grad
from .numerics import NormKind, circ_conv, dft, dual, idft, norm
from .optim import (
    LineSearch,
    RegKind,
    SteepestKind,
    TrainConfig,
    prox,
    regularization_path,
    steepest_step,
    train_proximal,
    train_steepest,
)
from .oracle import Certificate, check_certificate, min_norm
from .robusteval import RobustReport, adversarial_train, max_robust_eps, robust_accuracy, robust_report
from .synthdata import Dataset, augment, generate

__version__ = "0.1.0"

__all__ = [
    "AttackSpec", "Perturbation", "band_mask", "complex_linf_project", "fourier_linf_step",
    "CertificationError", "DatasetFormatError", "InfeasibleError", "InvalidInputError",
    "MaxRobustError", "StepSizeError", "SymmetryError",
    "ConvParams", "LinearParams", "LossKind", "effective_weight", "forward", "margin", "risk",
    "risk_grad", "NormKind", "circ_conv", "dft", "dual", "idft", "norm",
    "LineSearch", "RegKind", "SteepestKind", "TrainConfig", "prox", "regularization_path",
    "steepest_step", "train_proximal", "train_steepest",
    "Certificate", "check_certificate", "min_norm",
    "RobustReport", "adversarial_train", "max_robust_eps", "robust_accuracy", "robust_report",
    "Dataset", "augment", "generate",
]
