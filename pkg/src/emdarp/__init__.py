"""Electric dial-a-ride modeling and solving toolkit."""

from .instance import Instance, load_instance, save_instance
from .graph import expand_graph
from .model import build_model
from .search import SearchConfig, branch_and_bound, exhaustive_oracle
from .checker import validate
from .generate import GenConfig, generate

__all__ = [
    "Instance", "load_instance", "save_instance", "expand_graph",
    "build_model", "SearchConfig", "branch_and_bound", "exhaustive_oracle",
    "validate", "GenConfig", "generate",
]

__version__ = "0.1.0"
