"""Process-level settings (config/settings.yaml) and logging setup."""

import logging
import os
from typing import Dict, Optional

import yaml
from rich.console import Console
from rich.logging import RichHandler

DEFAULT_SETTINGS = {
    'logging': {
        'level': 'INFO',
        'format': '%(message)s',
    },
    'data': {
        'dir': './data/prepared',
        'output_dir': './data/runs',
    },
    'evaluation': {
        'workers': 1,
    },
}

DATA_DIR_ENV = 'SLU_DATA_DIR'

stderr_console = Console(stderr=True)


def _settings_path() -> str:
    return os.path.join(os.path.dirname(__file__), '..', 'config', 'settings.yaml')


def load_settings(path: Optional[str] = None) -> Dict:
    """
    Load settings.yaml merged over the built-in defaults.

    Args:
        path: Settings file (defaults to ``config/settings.yaml`` of the repo)

    Returns:
        Settings dict with every default section present
    """
    config_path = path or _settings_path()
    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            loaded = yaml.safe_load(f) or {}
    except FileNotFoundError:
        loaded = {}

    settings = {section: dict(values) for section, values in DEFAULT_SETTINGS.items()}
    for section, values in loaded.items():
        if isinstance(values, dict):
            settings.setdefault(section, {}).update(values)
        else:
            settings[section] = values
    return settings


def default_data_dir(settings: Optional[Dict] = None) -> str:
    """``SLU_DATA_DIR`` if set, else ``data.dir`` from settings."""
    settings = settings or load_settings()
    return os.environ.get(DATA_DIR_ENV) or settings['data']['dir']


def setup_logging(level: Optional[str] = None, settings: Optional[Dict] = None):
    """Route library logging to stderr through rich."""
    settings = settings or load_settings()
    level = (level or settings['logging']['level']).upper()
    handler = RichHandler(console=stderr_console, show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter(settings['logging']['format']))
    root = logging.getLogger('slu')
    root.handlers = [handler]
    root.setLevel(level)
    root.propagate = False
