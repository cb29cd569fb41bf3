from .evaluation import (ConfusionMatrix, MetricsReport, confusion, make_objective,
        metrics)
from .neuralnet import (AdamState, MLPParams, NetworkConfig, TrainSettings, activate,
        adam_step, backward, bce_loss, forward, init_params, load_params,
        predict_proba, save_params, sgd_step, train)
