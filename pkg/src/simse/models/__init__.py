"""Bundled reference models and the files shipped with them."""

from importlib import resources
from pathlib import Path

from ..devs import load_devs
from ..sd import load as load_sd
from .brooks import BrooksParams, brooks_model, trigger_time
from .fms import FmsParams, fms_model, mediator_spec

DATA = "data"


def data_path(name: str) -> Path:
    """Filesystem path of a bundled file (model, suite, config or golden output)."""
    return Path(str(resources.files(__name__).joinpath(DATA, name)))


def list_models() -> list[tuple[str, str]]:
    """``(file name, kind)`` for every bundled model file."""
    kinds = {".sd": "system dynamics", ".devsnl": "DEVS atomic", ".devsc": "DEVS coupled"}
    root = data_path("")
    return [(p.name, kinds[p.suffix]) for p in sorted(root.iterdir()) if p.suffix in kinds]


def resolve_model(ref: str, base_dir=None) -> Path:
    """Find a model file: relative to ``base_dir``, then the working
    directory, then the bundled files."""
    candidates = [Path(base_dir) / ref] if base_dir is not None else []
    candidates += [Path(ref), data_path(ref)]
    for p in candidates:
        if p.is_file():
            return p
    raise FileNotFoundError(ref)


def load_model(path):
    """Load an ``.sd``, ``.devsnl`` or ``.devsc`` file by suffix."""
    path = Path(path)
    if path.suffix == ".sd":
        return load_sd(path)
    if path.suffix in (".devsnl", ".devsc"):
        return load_devs(path)
    raise ValueError(f"unknown model file type {path.suffix!r} (expected .sd, .devsnl or .devsc)")
