from .kernels import (
    CompositeKernel,
    Kernel,
    KernelSpec,
    LinearKernel,
    MultiViewKernel,
    RbfKernel,
    kernel_eval,
)
from .calibrate import couple_pairwise, fit_platt, platt_probability
from .solver import SmoResult, nu_feasible, solve_nu_svm
from .model import (
    BinaryModel,
    MulticlassModel,
    ProbabilityTensor,
    SvmParams,
    load_model,
    predict_labels,
    predict_probabilities,
    save_model,
    train_binary,
    train_multiclass,
)

__all__ = [
    "BinaryModel",
    "CompositeKernel",
    "Kernel",
    "KernelSpec",
    "LinearKernel",
    "MulticlassModel",
    "MultiViewKernel",
    "ProbabilityTensor",
    "RbfKernel",
    "SmoResult",
    "SvmParams",
    "couple_pairwise",
    "fit_platt",
    "kernel_eval",
    "load_model",
    "nu_feasible",
    "platt_probability",
    "predict_labels",
    "predict_probabilities",
    "save_model",
    "solve_nu_svm",
    "train_binary",
    "train_multiclass",
]
