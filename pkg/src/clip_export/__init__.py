"""Offline embedding export sidecar.

Encodes text strings (and optionally images) and writes the JSONL
embedding store consumed by the engine. The engine itself never imports
an ML runtime; this sidecar is the only place model weights are loaded,
and even here the import happens lazily so the 'toy' encoder works in a
fully offline environment.
"""

from .export import ExportJob, run_export

__all__ = ["ExportJob", "run_export"]
