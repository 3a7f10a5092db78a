from . import csv_source, model_store

__all__ = ["csv_source", "model_store"]
