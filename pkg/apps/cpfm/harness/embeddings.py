from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from apps.cpfm.adaptation.model import CPFMModel
from apps.cpfm.datasets.generate import Dataset


def dump_embeddings(model: CPFMModel, dataset: Dataset, branch: int, path, teacher: int = 0) -> np.ndarray:
    """Write one mean-pooled encoder row per sample (n x d CSV) for the chosen branch."""
    enc = model.config
    dataset.check_shape(enc.series_len, enc.channels, enc.classes)
    rows = model.embeddings(dataset.x, teacher, branch)
    frame = pd.DataFrame(rows, columns=[f'e{j}' for j in range(rows.shape[1])])
    frame.insert(0, 'sample_id', dataset.ids.astype(np.int64))
    if dataset.labeled:
        frame.insert(1, 'label', dataset.labels)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g')
    return rows
