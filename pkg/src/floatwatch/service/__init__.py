"""Service assembly: configuration, the streaming pipeline, the HTTP API,
external detector backends and the command line."""

from .backend import BackendServer, ExternalBackend, constant_backend
from .config import AppConfig, config_from_dict, load_config
from .http import ApiServer, annotate
from .pipeline import EventRing, Pipeline, PipelineStats

__all__ = [
    "ApiServer",
    "AppConfig",
    "BackendServer",
    "EventRing",
    "ExternalBackend",
    "Pipeline",
    "PipelineStats",
    "annotate",
    "config_from_dict",
    "constant_backend",
    "load_config",
]
