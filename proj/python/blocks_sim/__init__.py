"""Python access to the reputation, ledger, cache and simulation core."""

import json

from . import _blocks
from ._blocks import (
    BlocksError,
    Ledger,
    confidence,
    consistency,
    distribute_resale,
    impact_reward,
    preset_names,
    preset_text,
    priority_of,
    sha256_hex,
    update_prompt_reputation,
    update_validator_reputation,
)

__all__ = [
    "BlocksError",
    "Ledger",
    "confidence",
    "consistency",
    "dedup",
    "distribute_resale",
    "error_code",
    "impact_reward",
    "preset_names",
    "preset_text",
    "priority_of",
    "run",
    "run_csv",
    "sha256_hex",
    "update_prompt_reputation",
    "update_validator_reputation",
    "validate",
]


def error_code(exc):
    """The code name a BlocksError message starts with, e.g. 'ConfigError'."""
    return str(exc).split(":", 1)[0]


def validate(config=None):
    """Checks a scenario dict and returns it with every default filled in."""
    return json.loads(_blocks.validate_config(json.dumps(config or {})))


def run(config=None):
    """Runs one scenario and returns its summary as a dict."""
    return json.loads(_blocks.run_summary(json.dumps(config or {})))


def run_csv(config=None):
    """Runs one scenario and returns the CSV outputs keyed by name."""
    return dict(_blocks.run_csv(json.dumps(config or {})))


def dedup(config):
    """Fixed-question storage experiment: (questions, ledger prompts, reduction)."""
    return tuple(_blocks.dedup(json.dumps(config)))
