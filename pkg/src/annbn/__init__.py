"""Neural networks trained by neighborhoods: per-cluster linear solves for
the hidden layer, least squares for the output layer."""
from .clustering import Assignment, ascending_partition, default_neuron_count, kmeans
from .dataset import Dataset, NormParams, load_csv, load_mnist_idx, normalize_targets, split
from .deep import DeepConfig, DeepNet, deepen, predict_deep, stack_layers
from .ensemble import Ensemble, fit_ensemble, predict_ensemble
from .kernels import Kernel, distance_sq, kernel_derivative, kernel_eval
from .pde import BoundaryCondition, OperatorTerm, PdeConfig, PdeProblem, solve_pde
from .persistence import load_model, save_model
from .rbf_net import RbfConfig, RbfNet, fit_rbf, predict_derivative, predict_rbf, select_shape
from .sigmoid_net import (
    Activation,
    SigmoidConfig,
    SigmoidNet,
    classify,
    fit,
    fit_classifier,
    predict,
)

__all__ = [
    "Assignment",
    "ascending_partition",
    "default_neuron_count",
    "kmeans",
    "Dataset",
    "NormParams",
    "load_csv",
    "load_mnist_idx",
    "normalize_targets",
    "split",
    "DeepConfig",
    "DeepNet",
    "deepen",
    "predict_deep",
    "stack_layers",
    "Ensemble",
    "fit_ensemble",
    "predict_ensemble",
    "Kernel",
    "distance_sq",
    "kernel_derivative",
    "kernel_eval",
    "BoundaryCondition",
    "OperatorTerm",
    "PdeConfig",
    "PdeProblem",
    "solve_pde",
    "load_model",
    "save_model",
    "RbfConfig",
    "RbfNet",
    "fit_rbf",
    "predict_derivative",
    "predict_rbf",
    "select_shape",
    "Activation",
    "SigmoidConfig",
    "SigmoidNet",
    "classify",
    "fit",
    "fit_classifier",
    "predict",
]

__version__ = "0.1.0"
