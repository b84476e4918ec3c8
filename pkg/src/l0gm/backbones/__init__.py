from .base import BINARY, MLP, MULTICLASS, GatedModel
from .cin import (CIN, cin_concat, cin_layer, cin_only_predict, cin_polynomial_oracle, cin_pool,
                  lowrank_weight)
from .embedding import FieldEmbeddingTable, embed_fields
from .graph import (GraphClassifier, GraphSpec, gcn_forward, gcn_layer, mean_aggregator,
                    normalized_adjacency, sage_forward, sage_layer)
from .integrated import IntegratedPredictor
from .losses import log_loss, nll_loss, total_objective
from .text import PooledTextClassifier, mean_pool, pooled_text_forward

__all__ = [
    "BINARY", "CIN", "FieldEmbeddingTable", "GatedModel", "GraphClassifier", "GraphSpec",
    "IntegratedPredictor", "MLP", "MULTICLASS", "PooledTextClassifier", "cin_concat", "cin_layer",
    "cin_only_predict", "cin_polynomial_oracle", "cin_pool", "embed_fields", "gcn_forward",
    "gcn_layer", "log_loss", "lowrank_weight", "mean_aggregator", "mean_pool", "nll_loss",
    "normalized_adjacency", "pooled_text_forward", "sage_forward", "sage_layer", "total_objective",
]
