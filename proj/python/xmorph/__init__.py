"""Cross-robot transfer of object-property features."""

import json

from ._xmorph import (
    EdnModel,
    Error,
    KemaModel,
    SvmModel,
    accuracy,
    featurize,
    fit_kema as _fit_kema,
    generalized_eig,
    mean_accuracy_delta,
    mel_spectrogram,
    spectro_temporal_histogram,
    synthesize as _synthesize,
    temporal_bin,
    train_edn as _train_edn,
    train_svm,
    evaluate as _evaluate,
)

__all__ = [
    "EdnModel",
    "Error",
    "KemaModel",
    "SvmModel",
    "accuracy",
    "evaluate",
    "featurize",
    "fit_kema",
    "generalized_eig",
    "mean_accuracy_delta",
    "mel_spectrogram",
    "spectro_temporal_histogram",
    "synthesize",
    "temporal_bin",
    "train_edn",
    "train_svm",
]


def _settings(options):
    out = {}
    for key, value in options.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        out[key] = str(value)
    return out


def fit_kema(x1, y1, x2, y2, **options):
    return _fit_kema(x1, list(y1), x2, list(y2), _settings(options))


def train_edn(source, target, seed=0, **options):
    return _train_edn(source, target, _settings(options), seed)


def synthesize(manifest_path, **options):
    """Writes a synthetic two-robot dataset; returns the record count."""
    return _synthesize(str(manifest_path), _settings(options))


def evaluate(manifest_path, report_csv=None, **options):
    """Runs the protocol selected by `task` and `method`; returns summary.json as a dict."""
    csv = None if report_csv is None else str(report_csv)
    return json.loads(_evaluate(str(manifest_path), _settings(options), csv))
