"""HuggingFace adapter for the alqs query-strategy engine's file formats."""

from .bundles import export_bundles, export_pseudo, greedy_nsp
from .config import AdapterConfig
from .encoding import export_embeddings

__version__ = "0.1.0"
