import json
import os
from difflib import get_close_matches
from pathlib import Path

import numpy as np
import yaml
from box import Box
from jinja2 import Template

from pulse_iv.constants import DEFAULT_CONFIG_PATH, PULSE_CONFIG
from pulse_iv.errors import InvalidConfig

TEMPLATE_DIR = Path(__file__).parent / "templates"
REPOSITORY_CONFIG = Path(__file__).parent.parent / DEFAULT_CONFIG_PATH


def closest_name(name: str, candidates: list[str], cutoff: float = 0.6) -> str | None:
    """Return the candidate most similar to name, if any is close enough."""
    options = get_close_matches(name, candidates, n=1, cutoff=cutoff)
    return options[0] if options else None


def load_config(path: str | None = None) -> Box:
    """Load the application config, defaulting to $PULSE_CONFIG, ./config.yaml or the repository's config.yaml."""
    path = path or os.getenv(PULSE_CONFIG)
    if not path:
        path = DEFAULT_CONFIG_PATH if Path(DEFAULT_CONFIG_PATH).exists() else REPOSITORY_CONFIG
    try:
        with open(path, "r") as file:
            return Box(yaml.safe_load(file) or {})
    except FileNotFoundError as e:
        raise InvalidConfig(f"Config file {path} not found") from e


def load_structured_file(path: str | Path) -> Box:
    """Load a JSON or YAML file into a Box, chosen by suffix."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as file:
            if path.suffix in (".yaml", ".yml"):
                content = yaml.safe_load(file)
            else:
                content = json.load(file)
    except FileNotFoundError as e:
        raise InvalidConfig(f"Config file {path} not found") from e
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise InvalidConfig(f"Could not parse {path}: {e}") from e
    if not isinstance(content, dict):
        raise InvalidConfig(f"{path} must contain a mapping at the top level")
    return Box(content)


def load_template(template_name: str) -> Box:
    """Load template file with specified name."""
    with open(TEMPLATE_DIR / f"{template_name}.yaml", "r") as file:
        return Box(yaml.safe_load(file))


def render_template(
    template_name: str,
    template_key: str,
    **kwargs,
) -> str:
    """Return rendered template."""
    template = str(load_template(template_name)[template_key])
    return Template(template).render(**kwargs).rstrip("\n")


def to_jsonable(value, digits: int = 10):
    """Convert numpy-heavy structures to JSON-friendly values with `digits` significant digits."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, digits) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v, digits) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            return str(value)
        return float(f"{value:.{digits}g}")
    if hasattr(value, "value") and hasattr(value, "name"):
        return value.name
    return value
