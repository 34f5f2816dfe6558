"""Tag recommendation with a convolutional head over frozen token embeddings.

Pipeline steps take a configuration dict with the same keys as the CLI's
``--config`` JSON and return ``(result, log_text)``.
"""

import json as _json

from ._core import (
    DataError,
    HeadModel,
    NumericError,
    calibrate_threshold,
    default_config,
    default_tau_grid,
    evaluate,
    f1_at_k,
    load_corpus,
    mock_embed,
    mock_token_ids,
    precision_at_k,
    preprocess_text,
    read_embedding_store,
    recall_at_k,
    run_calibrate,
    run_embed_mock,
    run_ingest,
    run_recommend,
    run_train,
    select_threshold_topk,
    write_embedding_store,
)
from ._core import run_evaluate as _run_evaluate

__version__ = "0.1.0"


def run_evaluate(config):
    """Evaluate and return ``(report_dict, log_text)``."""
    text, log = _run_evaluate(config)
    return _json.loads(text), log


__all__ = [name for name in dir() if not name.startswith("_")]
