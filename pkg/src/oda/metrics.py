"""Evaluation metrics shared by the learner, the baselines and the harness."""
import numpy as np
from sklearn.metrics import accuracy_score, f1_score

from .exceptions import NotClassifier


def _points(dataset_or_X):
    return getattr(dataset_or_X, "points", dataset_or_X)


def metric_distortion(model, X) -> float:
    """Average hard-quantization divergence of ``X`` to the model codebook."""
    _, dist = model.quantize(np.atleast_2d(_points(X)))
    return float(np.mean(dist))


def _check_classifier(model):
    if not getattr(model, "is_classifier", False):
        raise NotClassifier("accuracy/F1 need a classification model")


def metric_accuracy(model, X, y=None) -> float:
    _check_classifier(model)
    if y is None:
        X, y = X.points, X.labels
    return float(accuracy_score(np.asarray(y), model.predict(X)))


def metric_f1(model, X, y=None) -> float:
    """Macro F1: unweighted mean over classes. Classes never predicted
    score 0 rather than raising."""
    _check_classifier(model)
    if y is None:
        X, y = X.points, X.labels
    return f1_macro(y, model.predict(X))


def f1_macro(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    labels = np.unique(np.concatenate([y_true, np.asarray(y_pred)]))
    return float(f1_score(y_true, y_pred, labels=labels, average="macro",
                          zero_division=0))
