"""CSV record helpers shared by metrics, episode logs and reports"""

import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd


def sanitize_records(records: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Sanitize records for CSV emission.
    Converts NaN, inf, -inf to None (empty cell) and numpy scalars to Python values.
    """
    def sanitize_value(val):
        if val is None:
            return None
        if isinstance(val, (np.integer, np.floating, np.bool_)):
            val = val.item()
        if isinstance(val, float):
            if math.isnan(val) or math.isinf(val):
                return None
        return val

    return [
        {k: sanitize_value(v) for k, v in record.items()}
        for record in records
    ]


def append_records_csv(path: str | Path, records: List[Dict[str, Any]], columns: Sequence[str]) -> int:
    """
    Append records to a CSV file with a fixed column order, writing the header once

    Returns:
        Number of rows written
    """
    path = Path(path)
    if not records:
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(columns=list(columns)).to_csv(path, index=False)
        return 0
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(sanitize_records(records), columns=list(columns))
    write_header = not path.exists() or path.stat().st_size == 0
    df.to_csv(path, mode="a", header=write_header, index=False)
    return len(df)
