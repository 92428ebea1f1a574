"""Python bindings for the self-similar Markov tree lab.

JSON-shaped arguments (quadruplets, configs) are plain dicts in the same
layout as the config files.
"""

import json
from pathlib import Path

from ._ssmt import (
    SsmtError,
    Tree,
    analyze_cumulant,
    build_tree,
    cumulant,
    decompose,
    mean_formulas,
    potential,
    reconstruct_level_tree,
    run,
    tree_from_json,
)


def load_config(path):
    return json.loads(Path(path).read_text())


__all__ = [
    "SsmtError",
    "Tree",
    "analyze_cumulant",
    "build_tree",
    "cumulant",
    "decompose",
    "load_config",
    "mean_formulas",
    "potential",
    "reconstruct_level_tree",
    "run",
    "tree_from_json",
]
