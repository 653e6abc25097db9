from .base import FunctionModel, Predictor, sigmoid, softplus, weighted_loss
from .glm import GlmModel, fit_glm, parse_terms
from .nn import NnModel, TrainConfig, TrainingHistory, fit_nn
from .serialize import dumps_model, load_model, model_from_dict, model_to_dict, save_model
from .tree import TreeModel, fit_tree

__all__ = [
    "FunctionModel", "GlmModel", "NnModel", "Predictor", "TrainConfig", "TrainingHistory", "TreeModel",
    "dumps_model", "fit_glm", "fit_nn", "fit_tree", "load_model", "model_from_dict", "model_to_dict",
    "parse_terms", "save_model", "sigmoid", "softplus", "weighted_loss",
]
