"""Bundled network documents: ``alexnet`` and ``googlenet``."""

from importlib import resources

from .. import ir

NAMES = ("alexnet", "googlenet")


def text(name):
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(NAMES)}")
    return resources.files(__name__).joinpath(f"{name}.json").read_text(encoding="utf-8")


def load(name):
    return ir.loads(text(name))
