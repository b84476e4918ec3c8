from .adult import DEFAULT_PATH as ADULT_PATH
from .adult import DataError, load_adult, read_split_file
from .synthetic import (GRAPH, MODALITIES, TABULAR, TEXT, GraphData, SyntheticSpec, TextData,
                        make_synthetic_graph, make_synthetic_tabular, make_synthetic_text)
from .tabular import (CATEGORICAL, MISSING, NUMERIC, Bucketizer, TabularDataset, array_hash,
                      split_indices)
from .tasks import GraphTask, TabularTask, Task, TextTask, as_task

__all__ = [
    "ADULT_PATH", "Bucketizer", "CATEGORICAL", "DataError", "GRAPH", "GraphData", "GraphTask",
    "MISSING", "MODALITIES", "NUMERIC", "SyntheticSpec", "TABULAR", "TEXT", "TabularDataset",
    "TabularTask", "Task", "TextData", "TextTask", "array_hash", "as_task", "load_adult",
    "make_synthetic_graph", "make_synthetic_tabular", "make_synthetic_text", "read_split_file",
    "split_indices",
]
