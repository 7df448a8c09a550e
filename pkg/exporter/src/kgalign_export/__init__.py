"""Offline exporter producing per-entity text-embedding tables.

Two backends: a pretrained multilingual sentence encoder, and a
deterministic hash-based fixture generator for tests that must run without
model downloads. Output follows the embedding-file format the alignment
core accepts: a '#dim=<width>' header line, then one
'label<TAB>v1<TAB>...<TAB>v_width' row per entity.
"""

from kgalign_export.jobs import ExportError, ExportJob, export_embeddings

__version__ = "0.1.0"

__all__ = ["ExportJob", "ExportError", "export_embeddings", "__version__"]
