"""
Logging configuration for the bwalk sampler.

Two output formats are supported:
- text: rich console handler (human-readable, used by the CLI)
- json: one JSON object per record via json-logging (for collecting long
  experiment runs)
"""

import logging
import logging.config
from typing import Any, Dict, Optional

import json_logging

from bwalk.core.config import Settings, get_settings


def build_log_config(settings: Settings) -> Dict[str, Any]:
    """Build the dictConfig mapping for the configured format and level"""
    level = settings.app.LOG_LEVEL

    if settings.app.LOG_FORMAT == "json":
        console_handler: Dict[str, Any] = {
            "class": "logging.StreamHandler",
            "formatter": "json",
            "stream": "ext://sys.stderr",
        }
    else:
        console_handler = {
            "class": "rich.logging.RichHandler",
            "formatter": "rich",
            "rich_tracebacks": True,
            "show_path": False,
        }

    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                "datefmt": "%Y-%m-%d %H:%M:%S",
            },
            "rich": {"format": "%(message)s", "datefmt": "[%X]"},
            "json": {"()": json_logging.JSONLogFormatter},
        },
        "handlers": {"console": console_handler},
        "loggers": {
            "bwalk": {
                "handlers": ["console"],
                "level": level,
                "propagate": False,
            },
        },
        "root": {"level": "WARNING", "handlers": ["console"]},
    }

    if settings.app.LOG_FILE:
        config["handlers"]["file"] = {
            "class": "logging.FileHandler",
            "formatter": "json" if settings.app.LOG_FORMAT == "json" else "default",
            "filename": settings.app.LOG_FILE,
        }
        config["loggers"]["bwalk"]["handlers"].append("file")

    return config


def setup_logging(settings: Optional[Settings] = None) -> None:
    """Configure the bwalk logger hierarchy"""
    logging.config.dictConfig(build_log_config(settings or get_settings()))


def get_logger(name: str) -> logging.Logger:
    """Get a module logger"""
    return logging.getLogger(name)
