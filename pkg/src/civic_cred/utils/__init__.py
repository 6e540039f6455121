"""Shared helpers: configuration, logging, canonical JSON and file output."""

from .config import (REPLAY_TARGETS, AppConfig, LogConfig, ScenarioConfig,
                     load_config_from_file)
from .file_utils import (atomic_write_text, directory_exists, ensure_directory,
                         ensure_parent_directory, list_files_with_extension)
from .logger import get_logger, setup_logger
from .serialization import (bytes_to_hex, canonical_dumps, hex_to_bytes,
                            hex_to_int, int_to_hex, iter_jsonl, load_json,
                            loads, pretty_dumps, save_json, save_jsonl,
                            to_jsonable)

__all__ = [
    # config
    "ScenarioConfig",
    "LogConfig",
    "AppConfig",
    "REPLAY_TARGETS",
    "load_config_from_file",
    # logger
    "setup_logger",
    "get_logger",
    # serialization
    "int_to_hex",
    "hex_to_int",
    "bytes_to_hex",
    "hex_to_bytes",
    "to_jsonable",
    "canonical_dumps",
    "pretty_dumps",
    "loads",
    "save_json",
    "load_json",
    "save_jsonl",
    "iter_jsonl",
    # file_utils
    "ensure_directory",
    "ensure_parent_directory",
    "atomic_write_text",
    "list_files_with_extension",
    "directory_exists",
]
